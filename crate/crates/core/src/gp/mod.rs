//! Linear register-machine GP on pass/fail program-synthesis problems.

pub mod machine;
pub mod mutation;
pub mod problems;

pub use machine::{execute, Instruction, LinearProgram, Opcode, NUM_REGISTERS};
pub use mutation::{mutate_program, mutate_program_counted, MutationCounts, MutationRates};
pub use problems::{
    build_problem, check_solution, evaluate_case, read_cases, write_cases, ProblemName, ProblemSpec,
    TrainingCase,
};
