pub mod gradcheck;
pub mod oracle;
pub mod solver_cases;
