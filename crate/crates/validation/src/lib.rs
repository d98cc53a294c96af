//! Holds the `acceptance` test target, which runs every check in
//! `spraysim::verify` and prints one line per criterion.
