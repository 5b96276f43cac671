//! Command-line front end.
//!
//! Exit codes: 0 success, 1 semantic rejection, 2 malformed input or usage.

pub mod format;

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;

use crate::algebra::{Registry, VarId};
use crate::bitblast::{emit_bit, eval_defs, vec_value, Bit};
use crate::corpus::{sample, CorpusError};
use crate::lowerbound::{audit_cnf_derivation, audit_divisibility, ebvp_of_system, gen_ebvp};
use crate::proofs::{check_proof, Dialect, Proof};
use crate::translate::{eliminate_sqrt, simulate_extls};

use format::{
    parse_circuit, parse_proof, rule_histogram, serialize_proof, system_to_doc, to_json, BitDefDoc,
    EmissionDocument, FormatError, FORMAT,
};

/// Largest input count for which `gen --bitblast` checks every assignment.
pub const MAX_CLOSURE_INPUTS: usize = 16;

#[derive(Debug, Parser)]
#[command(
    name = "algproof",
    version,
    about = "Algebraic proof checker and translator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a proof file.
    Check {
        path: PathBuf,
        /// Check against this dialect instead of the declared one.
        #[arg(long)]
        dialect: Option<String>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Translate a proof into ExtPCeBVP.
    Translate {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the prime divisibility audit on a proof from eBVP axioms.
    Audit {
        path: PathBuf,
        /// Expected instance: bit count and constant.
        #[arg(long, num_args = 2, value_names = ["N", "M"], required = true)]
        ebvp: Vec<String>,
        #[arg(long, default_value_t = 1 << 16)]
        primes_limit: u64,
        /// Clause and Boolean equation lines, e.g. `clauses=4,9;booleans=3`.
        #[arg(long)]
        cnf_lines: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate systems, sample proofs and bit-blasting emissions.
    Gen {
        #[command(flatten)]
        source: GenSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print size and rule statistics of a proof file.
    Stats { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ls2pc,
    DropSqrt,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct GenSource {
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    ebvp: Option<Vec<String>>,
    /// An inequality-dialect sample by name.
    #[arg(long)]
    sample_extls: Option<String>,
    /// Any corpus sample by name.
    #[arg(long)]
    sample: Option<String>,
    /// A circuit file to bit-blast.
    #[arg(long)]
    bitblast: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Malformed(String),
    Rejected(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Malformed(_) => 2,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Malformed(e.to_string())
    }
}

type Outcome = Result<i32, CliError>;

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check {
            path,
            dialect,
            json,
        } => cmd_check(&path, dialect.as_deref(), json, out),
        Command::Translate { path, mode, out: o } => cmd_translate(&path, mode, &o, out),
        Command::Audit {
            path,
            ebvp,
            primes_limit,
            cnf_lines,
            out: o,
        } => cmd_audit(
            &path,
            &ebvp,
            primes_limit,
            cnf_lines.as_deref(),
            o.as_deref(),
            out,
        ),
        Command::Gen { source, out: o } => cmd_gen(&source, o.as_deref(), out),
        Command::Stats { path } => cmd_stats(&path, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let msg = match &e {
                CliError::Malformed(m) => format!("error: {m}"),
                CliError::Rejected(m) => format!("rejected: {m}"),
            };
            let _ = writeln!(err, "{msg}");
            e.code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Malformed(format!("stdout: {e}")))
}

fn load_proof(path: &Path) -> Result<(Proof, Registry), CliError> {
    Ok(parse_proof(&read(path)?)?)
}

#[derive(Serialize)]
struct CheckReportDoc {
    format: &'static str,
    kind: &'static str,
    accepted: bool,
    dialect: String,
    lines: usize,
    proof_size: u64,
    proof_degree: u32,
    first_failure: Option<FailureDoc>,
    refutation_constant: Option<String>,
}

#[derive(Serialize)]
struct FailureDoc {
    line: usize,
    reason: String,
}

fn cmd_check(path: &Path, dialect: Option<&str>, json: bool, out: &mut dyn Write) -> Outcome {
    let (mut p, _) = load_proof(path)?;
    if let Some(d) = dialect {
        p.dialect = Dialect::parse(d)
            .ok_or_else(|| CliError::Malformed(format!("unknown dialect `{d}`")))?;
    }
    let rep = check_proof(&p);
    let doc = CheckReportDoc {
        format: FORMAT,
        kind: "check-report",
        accepted: rep.accepted,
        dialect: p.dialect.to_string(),
        lines: p.lines.len(),
        proof_size: rep.proof_size,
        proof_degree: rep.proof_degree,
        first_failure: rep.first_failure.as_ref().map(|(l, r)| FailureDoc {
            line: *l,
            reason: r.to_string(),
        }),
        refutation_constant: rep
            .refutation_constant
            .as_ref()
            .map(format::rational_to_string),
    };
    if json {
        emit(out, &to_json(&doc))?;
    } else {
        let mut s = String::new();
        match &doc.first_failure {
            None => s.push_str("accepted\n"),
            Some(f) => s.push_str(&format!("rejected at line {}: {}\n", f.line, f.reason)),
        }
        s.push_str(&format!("dialect: {}\n", doc.dialect));
        s.push_str(&format!("lines: {}\n", doc.lines));
        s.push_str(&format!("proof_size: {}\n", doc.proof_size));
        s.push_str(&format!("proof_degree: {}\n", doc.proof_degree));
        if let Some(c) = &doc.refutation_constant {
            s.push_str(&format!("refutation_constant: {c}\n"));
        }
        emit(out, &s)?;
    }
    Ok(if rep.accepted { 0 } else { 1 })
}

#[derive(Serialize)]
struct SizeReport {
    format: &'static str,
    kind: &'static str,
    mode: &'static str,
    size_in: u64,
    size_out: u64,
    lines_in: usize,
    lines_out: usize,
    generators: BTreeMap<&'static str, usize>,
}

fn cmd_translate(path: &Path, mode: Mode, dest: &Path, out: &mut dyn Write) -> Outcome {
    let (p, mut reg) = load_proof(path)?;
    let art = match mode {
        Mode::Ls2pc => simulate_extls(&p, &mut reg),
        Mode::DropSqrt => eliminate_sqrt(&p, &mut reg),
    }
    .map_err(|e| CliError::Rejected(e.to_string()))?;
    let mut generators = BTreeMap::new();
    for e in &art.fragment_log {
        *generators.entry(e.generator).or_insert(0) += e.end - e.start;
    }
    write_file(dest, &serialize_proof(&art.output, &reg))?;
    let report = SizeReport {
        format: FORMAT,
        kind: "size-report",
        mode: match mode {
            Mode::Ls2pc => "ls2pc",
            Mode::DropSqrt => "drop-sqrt",
        },
        size_in: art.size_in,
        size_out: art.size_out,
        lines_in: p.lines.len(),
        lines_out: art.output.lines.len(),
        generators,
    };
    emit(out, &to_json(&report))?;
    Ok(0)
}

fn parse_ebvp_args(v: &[String]) -> Result<(usize, BigInt), CliError> {
    let bad = |s: &str| CliError::Malformed(format!("bad eBVP parameter `{s}`"));
    let n = v[0].parse::<usize>().map_err(|_| bad(&v[0]))?;
    let m = v[1].parse::<BigInt>().map_err(|_| bad(&v[1]))?;
    Ok((n, m))
}

fn parse_index_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Malformed(format!("bad line index `{t}`")))
        })
        .collect()
}

/// `clauses=1,2;booleans=3`; the Boolean part may be omitted.
fn parse_cnf_spec(spec: &str) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    let mut clauses = None;
    let mut booleans = Vec::new();
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        match part.split_once('=') {
            Some(("clauses", v)) => clauses = Some(parse_index_list(v)?),
            Some(("booleans", v)) => booleans = parse_index_list(v)?,
            _ => {
                return Err(CliError::Malformed(format!(
                    "bad --cnf-lines part `{part}`"
                )))
            }
        }
    }
    let clauses =
        clauses.ok_or_else(|| CliError::Malformed("--cnf-lines needs `clauses=`".into()))?;
    Ok((clauses, booleans))
}

fn cmd_audit(
    path: &Path,
    ebvp: &[String],
    primes_limit: u64,
    cnf: Option<&str>,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let (n, m) = parse_ebvp_args(ebvp)?;
    let cnf = cnf.map(parse_cnf_spec).transpose()?;
    let (p, _) = load_proof(path)?;
    let inst = ebvp_of_system(&p.system).map_err(|e| CliError::Rejected(e.to_string()))?;
    if inst.n != n || inst.m != m {
        return Err(CliError::Rejected(format!(
            "axioms are eBVP with n = {}, M = {}, not n = {n}, M = {m}",
            inst.n, inst.m
        )));
    }
    let report = match &cnf {
        None => audit_divisibility(&p, primes_limit),
        Some((c, b)) => audit_cnf_derivation(&p, c, b, primes_limit),
    }
    .map_err(|e| CliError::Rejected(e.to_string()))?;
    let text = to_json(&report);
    match dest {
        Some(d) => write_file(d, &text)?,
        None => emit(out, &text)?,
    }
    Ok(if report.is_clean() { 0 } else { 1 })
}

fn sample_error(e: CorpusError) -> CliError {
    match e {
        CorpusError::UnknownSample(_) => CliError::Malformed(e.to_string()),
        other => CliError::Rejected(other.to_string()),
    }
}

fn cmd_gen(g: &GenSource, dest: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let text = if let Some(v) = &g.ebvp {
        let (n, m) = parse_ebvp_args(v)?;
        let mut reg = Registry::new();
        let (_, sys) = gen_ebvp(n, &m, &mut reg).map_err(|e| CliError::Malformed(e.to_string()))?;
        to_json(&system_to_doc(&sys, Dialect::PC, &reg))
    } else if let Some(name) = &g.sample_extls {
        let e = sample(name).map_err(sample_error)?;
        if e.proof.dialect != Dialect::ExtLS {
            return Err(CliError::Malformed(format!(
                "sample `{name}` is not an inequality proof"
            )));
        }
        serialize_proof(&e.proof, &e.registry)
    } else if let Some(name) = &g.sample {
        let e = sample(name).map_err(sample_error)?;
        serialize_proof(&e.proof, &e.registry)
    } else if let Some(path) = &g.bitblast {
        to_json(&bitblast_document(&read(path)?)?)
    } else {
        unreachable!("clap requires one generator")
    };
    match dest {
        Some(d) => write_file(d, &text)?,
        None => emit(out, &text)?,
    }
    Ok(0)
}

fn bit_name(b: Bit, reg: &Registry) -> String {
    match b {
        Bit::Zero => "0".into(),
        Bit::One => "1".into(),
        Bit::Var(v) => reg.name(v).to_string(),
    }
}

/// Bit-blasts a circuit file and checks every gate's binary value against the
/// circuit on all Boolean assignments.
fn bitblast_document(text: &str) -> Result<EmissionDocument, CliError> {
    let (c, inputs, mut reg) = parse_circuit(text)?;
    if inputs.len() > MAX_CLOSURE_INPUTS {
        return Err(CliError::Malformed(format!(
            "{} inputs exceed {MAX_CLOSURE_INPUTS}",
            inputs.len()
        )));
    }
    let (env, _) = emit_bit(&c.gates, c.output, &mut reg);
    let defs: Vec<(VarId, _)> = env.defs.iter().map(|d| (d.var, d.def.clone())).collect();
    let mut checked = 0u64;
    for bits in 0u64..1 << inputs.len() {
        let assignment: HashMap<VarId, BigInt> = inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, BigInt::from(bits >> i & 1)))
            .collect();
        let values =
            eval_defs(&defs, &assignment).map_err(|e| CliError::Rejected(e.to_string()))?;
        let gates = c
            .eval_gates(|v| assignment.get(&v).cloned())
            .map_err(|e| CliError::Rejected(e.to_string()))?;
        for (r, vec) in env.vectors.iter().enumerate() {
            if vec_value(vec, &values).as_ref() != Some(&gates[r]) {
                return Err(CliError::Rejected(format!(
                    "gate {r} disagrees with its bits at assignment {bits:b}"
                )));
            }
        }
        if values
            .values()
            .any(|x| *x != BigInt::from(0) && *x != BigInt::from(1))
        {
            return Err(CliError::Rejected(format!(
                "non-Boolean bit at assignment {bits:b}"
            )));
        }
        checked += 1;
    }
    Ok(EmissionDocument {
        format: FORMAT.to_string(),
        kind: "emission".to_string(),
        inputs: inputs.iter().map(|v| reg.name(*v).to_string()).collect(),
        definitions: env
            .defs
            .iter()
            .map(|d| BitDefDoc {
                var: reg.name(d.var).to_string(),
                connective: d.conn.as_str().to_string(),
                def: format::poly_to_doc(&d.def, &reg),
                gate: d.prov.gate,
            })
            .collect(),
        gate_bits: env
            .vectors
            .iter()
            .map(|v| v.bits().iter().map(|b| bit_name(*b, &reg)).collect())
            .collect(),
        output: c.output,
        closure_checked_assignments: checked,
    })
}

#[derive(Serialize)]
struct StatsDoc {
    format: &'static str,
    kind: &'static str,
    ring: String,
    dialect: String,
    refutation: bool,
    accepted: bool,
    lines: usize,
    axioms: usize,
    proof_size: u64,
    proof_degree: u32,
    variables: BTreeMap<&'static str, usize>,
    rules: BTreeMap<String, usize>,
    max_coefficient_bits: u64,
}

fn cmd_stats(path: &Path, out: &mut dyn Write) -> Outcome {
    let (p, reg) = load_proof(path)?;
    let rep = check_proof(&p);
    let mut variables = BTreeMap::new();
    for (_, info) in reg.iter() {
        *variables.entry(info.kind.as_str()).or_insert(0) += 1;
    }
    let max_coefficient_bits = p
        .lines
        .iter()
        .flat_map(|l| {
            l.poly
                .terms()
                .map(|(_, c)| c.numer().bits().max(c.denom().bits()))
        })
        .max()
        .unwrap_or(0);
    let doc = StatsDoc {
        format: FORMAT,
        kind: "stats",
        ring: p.system.ring.to_string(),
        dialect: p.dialect.to_string(),
        refutation: p.claims_refutation,
        accepted: rep.accepted,
        lines: p.lines.len(),
        axioms: p.system.axioms.len(),
        proof_size: rep.proof_size,
        proof_degree: rep.proof_degree,
        variables,
        rules: rule_histogram(&p),
        max_coefficient_bits,
    };
    emit(out, &to_json(&doc))?;
    Ok(0)
}
