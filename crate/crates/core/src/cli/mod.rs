//! Command-line entry point, file formats and reports.

pub mod seqfile;
