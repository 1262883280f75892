use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const NUM_REGISTERS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opcode {
    /// `r[a] = input[b % num_inputs]`
    LoadInput,
    /// `r[a] = b`
    LoadConst,
    Add,
    Sub,
    Mul,
    /// `r[a] = r[b] / r[c]`, 0 when dividing by zero
    Div,
    /// `r[a] = r[b] % r[c]`, 0 when dividing by zero
    Mod,
    /// `r[a] = min(r[b], r[c])`
    Min,
    /// `r[a] = max(r[b], r[c])`
    Max,
    /// `r[a] = (r[b] < r[c]) as i64`
    Less,
    /// `r[a] = (r[b] == r[c]) as i64`
    Equal,
    /// Skip the next instruction when `r[a] == 0`.
    SkipIfZero,
    /// Skip the next `a + 1` instructions.
    JumpForward,
    /// `r[a] = r[b]`
    Copy,
    /// Submit `r[a]` as the program output.
    Output,
    Halt,
}

impl Opcode {
    pub const ALL: [Opcode; 16] = [
        Opcode::LoadInput,
        Opcode::LoadConst,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Mod,
        Opcode::Min,
        Opcode::Max,
        Opcode::Less,
        Opcode::Equal,
        Opcode::SkipIfZero,
        Opcode::JumpForward,
        Opcode::Copy,
        Opcode::Output,
        Opcode::Halt,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub op: Opcode,
    pub args: [u8; 3],
}

impl Instruction {
    /// Arguments are reduced modulo the register count.
    pub fn new(op: Opcode, a: u8, b: u8, c: u8) -> Self {
        let r = NUM_REGISTERS as u8;
        Instruction { op, args: [a % r, b % r, c % r] }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let op = Opcode::ALL[rng.random_range(0..Opcode::ALL.len())];
        let r = NUM_REGISTERS as u8;
        Instruction {
            op,
            args: [rng.random_range(0..r), rng.random_range(0..r), rng.random_range(0..r)],
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.args;
        write!(f, "{:?} {a} {b} {c}", self.op)
    }
}

/// A straight-line register-machine program.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearProgram {
    instructions: Vec<Instruction>,
}

impl LinearProgram {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        LinearProgram { instructions }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        LinearProgram { instructions: (0..len).map(|_| Instruction::random(rng)).collect() }
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub(crate) fn instructions_mut(&mut self) -> &mut Vec<Instruction> {
        &mut self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn genotype_hash(&self) -> u64 {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let mut h = DefaultHasher::new();
        self.instructions.hash(&mut h);
        h.finish()
    }
}

/// Runs `program` on `inputs` for at most `max_steps` executed instructions.
///
/// Registers start with the inputs in order (remaining registers zero).
/// Returns the last value submitted by an `Output` instruction, if any.
pub fn execute(program: &LinearProgram, inputs: &[i64], max_steps: usize) -> Option<i64> {
    let mut r = [0i64; NUM_REGISTERS];
    for (reg, &x) in r.iter_mut().zip(inputs) {
        *reg = x;
    }
    let code = program.instructions();
    let mut out = None;
    let mut pc = 0;
    let mut steps = 0;
    while pc < code.len() && steps < max_steps {
        let Instruction { op, args: [a, b, c] } = code[pc];
        let (a, b, c) = (a as usize, b as usize, c as usize);
        steps += 1;
        pc += 1;
        match op {
            Opcode::LoadInput => {
                r[a] = if inputs.is_empty() { 0 } else { inputs[b % inputs.len()] };
            }
            Opcode::LoadConst => r[a] = b as i64,
            Opcode::Add => r[a] = r[b].wrapping_add(r[c]),
            Opcode::Sub => r[a] = r[b].wrapping_sub(r[c]),
            Opcode::Mul => r[a] = r[b].wrapping_mul(r[c]),
            Opcode::Div => r[a] = if r[c] == 0 { 0 } else { r[b].wrapping_div(r[c]) },
            Opcode::Mod => r[a] = if r[c] == 0 { 0 } else { r[b].wrapping_rem(r[c]) },
            Opcode::Min => r[a] = r[b].min(r[c]),
            Opcode::Max => r[a] = r[b].max(r[c]),
            Opcode::Less => r[a] = i64::from(r[b] < r[c]),
            Opcode::Equal => r[a] = i64::from(r[b] == r[c]),
            Opcode::SkipIfZero => {
                if r[a] == 0 {
                    pc += 1;
                }
            }
            Opcode::JumpForward => pc += a + 1,
            Opcode::Copy => r[a] = r[b],
            Opcode::Output => out = Some(r[a]),
            Opcode::Halt => break,
        }
    }
    out
}
