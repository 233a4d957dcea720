pub mod basis;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod penalty;
pub mod poly;
pub mod verify;
pub mod examples;
pub mod problem_file;
pub mod cli;
