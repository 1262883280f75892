//! Median and Grade program-synthesis problems with pass/fail evaluation.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::machine::{execute, LinearProgram};
use crate::error::{Error, Result};

pub const TRAINING_SET_SIZE: usize = 100;
pub const TESTING_SET_SIZE: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemName {
    Median,
    Grade,
}

impl ProblemName {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Median => "median",
            ProblemName::Grade => "grade",
        }
    }

    pub fn num_inputs(self) -> usize {
        match self {
            ProblemName::Median => 3,
            ProblemName::Grade => 5,
        }
    }

    /// Maximum program length, which is also the execution step limit.
    pub fn max_len(self) -> usize {
        match self {
            ProblemName::Median => 64,
            ProblemName::Grade => 128,
        }
    }

    /// Reference output for `inputs`.
    pub fn expected_output(self, inputs: &[i64]) -> i64 {
        match self {
            ProblemName::Median => median3(inputs),
            ProblemName::Grade => grade_code(inputs),
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "median" => Ok(ProblemName::Median),
            "grade" => Ok(ProblemName::Grade),
            _ => Err(Error::UnknownProblem(s.to_string())),
        }
    }
}

fn median3(inputs: &[i64]) -> i64 {
    let (a, b, c) = (inputs[0], inputs[1], inputs[2]);
    a.min(b).max(a.max(b).min(c))
}

pub const GRADE_LETTERS: [&str; 5] = ["A", "B", "C", "D", "F"];

/// Inputs are `[A, B, C, D, score]`; output code 0..=4 stands for A..F.
fn grade_code(inputs: &[i64]) -> i64 {
    let score = inputs[4];
    inputs[..4].iter().filter(|&&t| score < t).count() as i64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCase {
    pub inputs: Vec<i64>,
    pub expected_output: i64,
    pub category: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub training: Vec<TrainingCase>,
    pub testing: Vec<TrainingCase>,
    pub max_len: usize,
    pub max_steps: usize,
}

/// 1.0 when the program's output matches the expected output, else 0.0.
pub fn evaluate_case(program: &LinearProgram, case: &TrainingCase, max_steps: usize) -> f64 {
    match execute(program, &case.inputs, max_steps) {
        Some(out) if out == case.expected_output => 1.0,
        _ => 0.0,
    }
}

/// True when the program passes every training and every testing case.
pub fn check_solution(program: &LinearProgram, spec: &ProblemSpec) -> bool {
    spec.training
        .iter()
        .chain(&spec.testing)
        .all(|c| evaluate_case(program, c, spec.max_steps) == 1.0)
}

fn median_case(inputs: [i64; 3]) -> TrainingCase {
    let [a, b, c] = inputs;
    let category = if a == b && b == c {
        "all-equal"
    } else if a == b || b == c || a == c {
        "two-equal"
    } else {
        "distinct"
    };
    TrainingCase {
        inputs: inputs.to_vec(),
        expected_output: median3(&inputs),
        category: category.to_string(),
    }
}

fn grade_case(thresholds: [i64; 4], score: i64) -> TrainingCase {
    let mut inputs = thresholds.to_vec();
    inputs.push(score);
    let code = grade_code(&inputs);
    TrainingCase { inputs, expected_output: code, category: GRADE_LETTERS[code as usize].to_string() }
}

fn random_median<R: Rng + ?Sized>(rng: &mut R) -> TrainingCase {
    median_case([0; 3].map(|_| rng.random_range(-100..=100)))
}

fn median_edges<R: Rng + ?Sized>(rng: &mut R, variants: usize) -> Vec<TrainingCase> {
    let mut out = vec![
        median_case([-100, -100, -100]),
        median_case([0, 0, 0]),
        median_case([100, 100, 100]),
        median_case([-100, 100, 0]),
        median_case([100, -100, 0]),
        median_case([0, 100, -100]),
        median_case([-100, -100, 100]),
        median_case([100, 100, -100]),
    ];
    for _ in 0..variants {
        let x = rng.random_range(-100..=100);
        out.push(median_case([x, x, x]));
        let mut y = rng.random_range(-100..=100);
        if y == x {
            y = if x < 100 { x + 1 } else { x - 1 };
        }
        // the repeated value in every position, both above and below the odd one out
        for (p, q) in [(x, y), (y, x)] {
            out.push(median_case([p, p, q]));
            out.push(median_case([p, q, p]));
            out.push(median_case([q, p, p]));
        }
    }
    out
}

fn random_thresholds<R: Rng + ?Sized>(rng: &mut R) -> [i64; 4] {
    let mut t: Vec<i64> = index::sample(rng, 100, 4).into_iter().map(|i| i as i64 + 1).collect();
    t.sort_unstable_by(|a, b| b.cmp(a));
    [t[0], t[1], t[2], t[3]]
}

fn random_grade<R: Rng + ?Sized>(rng: &mut R) -> TrainingCase {
    let t = random_thresholds(rng);
    grade_case(t, rng.random_range(0..=100))
}

fn grade_edges<R: Rng + ?Sized>(rng: &mut R, threshold_sets: usize) -> Vec<TrainingCase> {
    let mut out = Vec::new();
    for _ in 0..threshold_sets {
        let t = random_thresholds(rng);
        for &x in &t {
            out.push(grade_case(t, x));
            out.push(grade_case(t, x - 1));
        }
        out.push(grade_case(t, 0));
        out.push(grade_case(t, 100));
    }
    out
}

fn fill<R: Rng + ?Sized>(
    mut cases: Vec<TrainingCase>,
    size: usize,
    rng: &mut R,
    random: fn(&mut R) -> TrainingCase,
) -> Vec<TrainingCase> {
    cases.truncate(size);
    while cases.len() < size {
        cases.push(random(rng));
    }
    cases
}

/// Generates the training (100) and testing (1000) sets. Edge cases come
/// first; the remainder is uniform random, so category balance is not
/// enforced.
pub fn build_problem<R: Rng + ?Sized>(name: ProblemName, rng: &mut R) -> ProblemSpec {
    let (training, testing) = match name {
        ProblemName::Median => {
            let train = median_edges(rng, 2);
            let test = median_edges(rng, 20);
            (
                fill(train, TRAINING_SET_SIZE, rng, random_median::<R>),
                fill(test, TESTING_SET_SIZE, rng, random_median::<R>),
            )
        }
        ProblemName::Grade => {
            let train = grade_edges(rng, 2);
            let test = grade_edges(rng, 20);
            (
                fill(train, TRAINING_SET_SIZE, rng, random_grade::<R>),
                fill(test, TESTING_SET_SIZE, rng, random_grade::<R>),
            )
        }
    };
    ProblemSpec { name, training, testing, max_len: name.max_len(), max_steps: name.max_len() }
}

/// Writes cases as CSV: `in0..inN, expected_output, category`.
pub fn write_cases<W: Write>(cases: &[TrainingCase], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = cases.first().map_or(0, |c| c.inputs.len());
    let mut header: Vec<String> = (0..width).map(|i| format!("in{i}")).collect();
    header.push("expected_output".into());
    header.push("category".into());
    w.write_record(&header)?;
    for c in cases {
        let mut row: Vec<String> = c.inputs.iter().map(i64::to_string).collect();
        row.push(c.expected_output.to_string());
        row.push(c.category.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cases<R: Read>(input: R) -> Result<Vec<TrainingCase>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let n = row.len();
        if n < 2 {
            return Err(Error::config("case file rows need at least an output and a category"));
        }
        let parse = |s: &str| {
            s.trim().parse::<i64>().map_err(|e| Error::config(format!("bad integer `{s}`: {e}")))
        };
        let inputs = row.iter().take(n - 2).map(parse).collect::<Result<Vec<_>>>()?;
        out.push(TrainingCase {
            inputs,
            expected_output: parse(&row[n - 2])?,
            category: row[n - 1].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::machine::{Instruction, Opcode::*};
    use crate::rng::RngStream;

    fn prog(code: &[(crate::gp::machine::Opcode, u8, u8, u8)]) -> LinearProgram {
        LinearProgram::new(code.iter().map(|&(op, a, b, c)| Instruction::new(op, a, b, c)).collect())
    }

    /// median = max(min(a, b), min(max(a, b), c)) via conditional copies.
    pub(crate) fn reference_median() -> LinearProgram {
        prog(&[
            (Copy, 3, 0, 0),
            (Less, 6, 1, 0),
            (SkipIfZero, 6, 0, 0),
            (Copy, 3, 1, 0), // r3 = min(a, b)
            (Copy, 4, 1, 0),
            (SkipIfZero, 6, 0, 0),
            (Copy, 4, 0, 0), // r4 = max(a, b)
            (Copy, 5, 4, 0),
            (Less, 6, 2, 4),
            (SkipIfZero, 6, 0, 0),
            (Copy, 5, 2, 0), // r5 = min(r4, c)
            (Copy, 7, 5, 0),
            (Less, 6, 5, 3),
            (SkipIfZero, 6, 0, 0),
            (Copy, 7, 3, 0), // r7 = max(r3, r5)
            (Output, 7, 0, 0),
        ])
    }

    fn sorting_median(inputs: &[i64]) -> i64 {
        let mut v = inputs.to_vec();
        v.sort_unstable();
        v[1]
    }

    fn scan_grade(inputs: &[i64]) -> i64 {
        let score = inputs[4];
        for (code, &t) in inputs[..4].iter().enumerate() {
            if score >= t {
                return code as i64;
            }
        }
        4
    }

    #[test]
    fn median_examples() {
        let case = |i: [i64; 3]| median_case(i);
        let outputs_two = prog(&[(Output, 1, 0, 0)]);
        assert_eq!(evaluate_case(&outputs_two, &case([1, 2, 3]), 64), 1.0);
        let outputs_first = prog(&[(Output, 0, 0, 0)]);
        assert_eq!(evaluate_case(&outputs_first, &case([5, 5, -5]), 64), 1.0);
        let silent = prog(&[(Copy, 0, 1, 0)]);
        assert_eq!(evaluate_case(&silent, &case([1, 1, 1]), 64), 0.0);
    }

    #[test]
    fn median_set_matches_sorting_oracle() {
        let spec = build_problem(ProblemName::Median, RngStream::new(7).init());
        assert_eq!(spec.training.len(), 100);
        assert_eq!(spec.testing.len(), 1000);
        for c in spec.training.iter().chain(&spec.testing) {
            assert!(c.inputs.iter().all(|x| (-100..=100).contains(x)));
            assert_eq!(c.expected_output, sorting_median(&c.inputs));
        }
        for set in [&spec.training, &spec.testing] {
            for cat in ["all-equal", "two-equal", "distinct"] {
                assert!(set.iter().any(|c| c.category == cat), "{cat}");
            }
            assert!(set.iter().any(|c| c.inputs.contains(&100)));
            assert!(set.iter().any(|c| c.inputs.contains(&-100)));
        }
    }

    #[test]
    fn grade_set_matches_scan_oracle() {
        let spec = build_problem(ProblemName::Grade, RngStream::new(7).init());
        assert_eq!((spec.training.len(), spec.testing.len()), (100, 1000));
        for c in spec.training.iter().chain(&spec.testing) {
            let t = &c.inputs[..4];
            assert!(t.windows(2).all(|w| w[0] > w[1]), "{t:?}");
            assert!(c.inputs.iter().all(|x| (0..=100).contains(x)));
            assert_eq!(c.expected_output, scan_grade(&c.inputs));
            assert_eq!(c.category, GRADE_LETTERS[c.expected_output as usize]);
        }
        // score exactly on each threshold appears in training
        for k in 0..4 {
            assert!(spec.training.iter().any(|c| c.inputs[4] == c.inputs[k]));
        }
        assert!(spec.training.iter().any(|c| c.inputs[4] == 0));
        assert!(spec.training.iter().any(|c| c.inputs[4] == 100));
        assert_eq!(spec.max_len, 128);
    }

    #[test]
    fn same_seed_same_files() {
        let dump = |seed| {
            let spec = build_problem(ProblemName::Grade, RngStream::new(seed).init());
            let mut buf = Vec::new();
            write_cases(&spec.training, &mut buf).unwrap();
            write_cases(&spec.testing, &mut buf).unwrap();
            buf
        };
        assert_eq!(dump(3), dump(3));
        assert_ne!(dump(3), dump(4));
    }

    #[test]
    fn csv_round_trip() {
        let spec = build_problem(ProblemName::Median, RngStream::new(1).init());
        let mut buf = Vec::new();
        write_cases(&spec.training, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("in0,in1,in2,expected_output,category\n"));
        assert_eq!(read_cases(&buf[..]).unwrap(), spec.training);
    }

    #[test]
    fn unknown_problem_name() {
        assert!(matches!("fizzbuzz".parse::<ProblemName>(), Err(Error::UnknownProblem(_))));
        assert_eq!("Median".parse::<ProblemName>().unwrap(), ProblemName::Median);
    }

    #[test]
    fn reference_median_solves() {
        let spec = build_problem(ProblemName::Median, RngStream::new(11).init());
        assert!(check_solution(&reference_median(), &spec));
    }

    #[test]
    fn single_failure_rejects() {
        let mut spec = build_problem(ProblemName::Median, RngStream::new(11).init());
        spec.testing[500].expected_output += 1;
        assert!(!check_solution(&reference_median(), &spec));
    }

    #[test]
    fn overfit_constant_rejected() {
        // a training set where every median is 0, solved by "output 0"
        let mut spec = build_problem(ProblemName::Median, RngStream::new(5).init());
        let mut rng = RngStream::new(6);
        spec.training = (0..100)
            .map(|_| {
                let lo = rng.init().random_range(-100..=0);
                let hi = rng.init().random_range(0..=100);
                median_case([lo, 0, hi])
            })
            .collect();
        let constant = prog(&[(LoadConst, 0, 0, 0), (Output, 0, 0, 0)]);
        assert!(spec.training.iter().all(|c| evaluate_case(&constant, c, 64) == 1.0));
        assert!(!check_solution(&constant, &spec));
    }

    #[test]
    fn grade_reference_program() {
        // code = (score < A) + (score < B) + (score < C) + (score < D)
        let p = prog(&[
            (Less, 5, 4, 0),
            (Less, 6, 4, 1),
            (Add, 5, 5, 6),
            (Less, 6, 4, 2),
            (Add, 5, 5, 6),
            (Less, 6, 4, 3),
            (Add, 5, 5, 6),
            (Output, 5, 0, 0),
        ]);
        let spec = build_problem(ProblemName::Grade, RngStream::new(2).init());
        assert!(check_solution(&p, &spec));
    }
}
