//! Command-line front end.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;

use crate::algebra::{DegreeWindow, PGroup};
use crate::document::{FpEntry, Groups, ResultDocument, VcEntry};
use crate::error::{Error, Result};
use crate::oracle::verify;
use crate::rep::{shift_bound, ChromaticContext, VirtualRep};
use crate::sweeps::run_acceptance;
use crate::trss::compute_tr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
    Latex,
}

#[derive(Debug, Parser)]
#[command(
    name = "trcalc",
    version,
    about = "RO(S^1)-graded TR-groups of F_p, Z and l"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(id = "repspec", required = true, multiple = false)]
struct RepArgs {
    /// Fixed-point dimensions d_0, d_1, ... (entries may be negative).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dims: Option<Vec<i64>>,
    /// Weights of an actual representation, one per irreducible summand.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Option<Vec<i64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute TR^level in a window of degrees.
    Compute {
        #[arg(long)]
        prime: i64,
        #[arg(long, default_value_t = 0)]
        chromatic: u32,
        #[arg(long)]
        level: u32,
        #[command(flatten)]
        rep: RepArgs,
        /// Use the negative of the given representation.
        #[arg(long)]
        negate: bool,
        /// Inclusive degree window lo:hi.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Attach an oracle report; exit 3 when it fails.
        #[arg(long)]
        verify: bool,
    },
    /// Print the dimension sequence of a representation.
    Rep {
        #[arg(long)]
        prime: i64,
        #[arg(long)]
        length: Option<usize>,
        #[command(flatten)]
        rep: RepArgs,
        /// Use the negative of the given representation.
        #[arg(long)]
        negate: bool,
    },
    /// Run the acceptance sweeps.
    Verify,
    /// Compute over a parameter grid, one JSON document per line.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<i64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        chromatic: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<u32>,
        #[command(flatten)]
        rep: RepArgs,
        /// Use the negative of the given representation.
        #[arg(long)]
        negate: bool,
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        verify: bool,
    },
}

/// How a representation was specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepSpec {
    Dims(Vec<i64>),
    Weights(Vec<i64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubcommandKind {
    Compute,
    Rep,
    Verify,
    Sweep,
}

/// A validated invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub primes: Vec<i64>,
    pub chromatic: Vec<u32>,
    pub levels: Vec<u32>,
    pub rep: Option<RepSpec>,
    pub negate: bool,
    pub length: Option<usize>,
    pub window: Option<DegreeWindow>,
    pub format: Format,
    pub verify: bool,
}

impl RunConfig {
    /// The representation at prime `p`, long enough for `level`.
    pub fn build_rep(&self, p: i64, level: u32) -> Result<VirtualRep> {
        let rep = match self
            .rep
            .as_ref()
            .ok_or_else(|| Error::Usage("no representation".into()))?
        {
            RepSpec::Dims(d) => {
                let r = VirtualRep::from_dims(d.clone())?;
                r.require_len(level as usize)?;
                r
            }
            RepSpec::Weights(w) => {
                let len = self.length.unwrap_or(level as usize + 1);
                VirtualRep::from_weights(w, p, len)?
            }
        };
        Ok(if self.negate { rep.negated() } else { rep })
    }
}

fn parse_range(s: &str) -> Result<DegreeWindow> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Usage(format!("range '{s}' is not of the form lo:hi")))?;
    let num = |x: &str| {
        x.trim()
            .parse::<i64>()
            .map_err(|_| Error::Usage(format!("range bound '{x}' is not an integer")))
    };
    DegreeWindow::new(num(lo)?, num(hi)?)
}

fn rep_spec(r: &RepArgs) -> RepSpec {
    match (&r.dims, &r.weights) {
        (Some(d), _) => RepSpec::Dims(d.clone()),
        (None, Some(w)) => RepSpec::Weights(w.clone()),
        (None, None) => unreachable!("clap enforces the group"),
    }
}

/// Parse and validate `argv` (including the program name).
pub fn parse<I, T>(argv: I) -> std::result::Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseOutcome::Clap)?;
    let cfg = match cli.command {
        Command::Compute {
            prime,
            chromatic,
            level,
            rep,
            negate,
            range,
            format,
            verify,
        } => RunConfig {
            subcommand: SubcommandKind::Compute,
            primes: vec![prime],
            chromatic: vec![chromatic],
            levels: vec![level],
            rep: Some(rep_spec(&rep)),
            negate,
            length: None,
            window: Some(parse_range(&range).map_err(ParseOutcome::Invalid)?),
            format,
            verify,
        },
        Command::Rep {
            prime,
            length,
            rep,
            negate,
        } => RunConfig {
            subcommand: SubcommandKind::Rep,
            primes: vec![prime],
            chromatic: vec![0],
            levels: vec![],
            rep: Some(rep_spec(&rep)),
            negate,
            length,
            window: None,
            format: Format::Table,
            verify: false,
        },
        Command::Verify => RunConfig {
            subcommand: SubcommandKind::Verify,
            primes: vec![],
            chromatic: vec![],
            levels: vec![],
            rep: None,
            negate: false,
            length: None,
            window: None,
            format: Format::Table,
            verify: true,
        },
        Command::Sweep {
            primes,
            chromatic,
            levels,
            rep,
            negate,
            range,
            verify,
        } => RunConfig {
            subcommand: SubcommandKind::Sweep,
            primes,
            chromatic,
            levels,
            rep: Some(rep_spec(&rep)),
            negate,
            length: None,
            window: Some(parse_range(&range).map_err(ParseOutcome::Invalid)?),
            format: Format::Json,
            verify,
        },
    };
    validate(&cfg).map_err(ParseOutcome::Invalid)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    for &p in &cfg.primes {
        if cfg.subcommand == SubcommandKind::Rep {
            cfg.build_rep(p, 1)?;
            continue;
        }
        for &c in &cfg.chromatic {
            ChromaticContext::new(c, p)?;
            for &level in &cfg.levels {
                if level == 0 {
                    return Err(Error::LevelTooSmall { min: 1, got: 0 });
                }
                cfg.build_rep(p, level)?;
            }
        }
    }
    Ok(())
}

/// Error from [`parse`]: clap's own (help, version, syntax) or validation.
#[derive(Debug)]
pub enum ParseOutcome {
    Clap(clap::Error),
    Invalid(Error),
}

fn show_group(g: &PGroup) -> String {
    g.to_string()
}

fn fp_group(e: &FpEntry) -> PGroup {
    let mut exps = Vec::new();
    for s in &e.summands {
        exps.extend(std::iter::repeat_n(s.exp, s.count as usize));
    }
    PGroup::new(exps)
}

fn tower_text(c: u32, e: &VcEntry) -> String {
    let mut out = format!("length {}", e.length);
    if !e.towers.is_empty() {
        let towers: Vec<String> = e
            .towers
            .iter()
            .map(|t| format!("P_{}(v_{c}){{{}}}", t.height, t.word))
            .collect();
        out.push_str(&format!("; starts {}", towers.join(", ")));
    }
    out
}

fn latex_group(g: &PGroup) -> String {
    if g.is_zero() {
        return "0".into();
    }
    g.summands()
        .into_iter()
        .map(|(e, n)| {
            let base = if e == 1 {
                "\\mathbb{Z}/p".to_string()
            } else {
                format!("\\mathbb{{Z}}/p^{{{e}}}")
            };
            if n == 1 {
                base
            } else {
                format!("({base})^{{{n}}}")
            }
        })
        .collect::<Vec<_>>()
        .join(" \\oplus ")
}

fn latex_word(w: &str) -> String {
    if w == "1" {
        return String::new();
    }
    w.split('*')
        .map(|l| match l {
            "lambda_1" => "\\lambda_1",
            "lambda_2" => "\\lambda_2",
            "beta" => "\\beta",
            "u" => "u",
            other => other,
        })
        .collect::<Vec<_>>()
        .join("")
}

fn latex_towers(c: u32, e: &VcEntry) -> String {
    let mut out = format!("\\ell = {}", e.length);
    for t in &e.towers {
        out.push_str(&format!(
            ", P_{{{}}}(v_{c}){}",
            t.height,
            latex_word(&t.word)
        ));
    }
    out
}

fn provenance(doc: &ResultDocument, q: i64) -> String {
    let m = &doc.meta;
    let method = if m.c == 0 {
        "mod p^l reconstruction"
    } else {
        "E-infinity"
    };
    let stable = ChromaticContext::new(m.c, m.p)
        .ok()
        .zip(VirtualRep::from_dims(m.dims.clone()).ok())
        .and_then(|(ctx, rep)| shift_bound(&ctx, &rep, m.level).ok())
        .is_some_and(|b| q >= b);
    if stable {
        format!("{method}, stable")
    } else {
        method.to_string()
    }
}

/// Render a document.
pub fn emit(doc: &ResultDocument, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = doc.to_json();
            s.push('\n');
            s
        }
        Format::Table => emit_table(doc),
        Format::Latex => emit_latex(doc),
    }
}

fn emit_table(doc: &ResultDocument) -> String {
    let m = &doc.meta;
    let mut out = format!(
        "# TR^{} at p={}, c={}, dims={:?}, delta={:?}, stable_bound={}\n",
        m.level, m.p, m.c, m.dims, m.delta, m.stable_bound
    );
    for c in &m.caveats {
        out.push_str(&format!("# caveat: {c}\n"));
    }
    let rows: Vec<(i64, String)> = match &doc.groups {
        Groups::Fp(es) => es.iter().map(|e| (e.q, show_group(&fp_group(e)))).collect(),
        Groups::Vc(es) => es.iter().map(|e| (e.q, tower_text(m.c, e))).collect(),
    };
    let qw = rows
        .iter()
        .map(|(q, _)| q.to_string().len())
        .chain(std::iter::once(1))
        .max()
        .unwrap_or(1);
    let gw = rows
        .iter()
        .map(|(_, g)| g.len())
        .chain(std::iter::once(5))
        .max()
        .unwrap_or(5);
    out.push_str(&format!("{:>qw$} | {:<gw$} | provenance\n", "q", "group"));
    for (q, g) in &rows {
        out.push_str(&format!("{q:>qw$} | {g:<gw$} | {}\n", provenance(doc, *q)));
    }
    if let Some(v) = &doc.verification {
        out.push_str(&format!(
            "# verification: {} ({} checks, {} failures)\n",
            if v.passes() { "pass" } else { "FAIL" },
            v.entries.len(),
            v.failures.len()
        ));
        for f in &v.failures {
            out.push_str(&format!("#   {f}\n"));
        }
    }
    out
}

fn emit_latex(doc: &ResultDocument) -> String {
    let m = &doc.meta;
    let mut out = String::from("\\begin{tabular}{r|l}\n$q$ & group \\\\\n\\hline\n");
    let rows: Vec<(i64, String)> = match &doc.groups {
        Groups::Fp(es) => es
            .iter()
            .map(|e| (e.q, latex_group(&fp_group(e))))
            .collect(),
        Groups::Vc(es) => es.iter().map(|e| (e.q, latex_towers(m.c, e))).collect(),
    };
    for (q, g) in rows {
        out.push_str(&format!("${q}$ & ${g}$ \\\\\n"));
    }
    out.push_str("\\end{tabular}\n");
    for c in &m.caveats {
        out.push_str(&format!("% caveat: {c}\n"));
    }
    out
}

fn compute_document(cfg: &RunConfig, p: i64, c: u32, level: u32) -> Result<(ResultDocument, bool)> {
    let ctx = ChromaticContext::new(c, p)?;
    let rep = cfg.build_rep(p, level)?;
    let window = cfg
        .window
        .ok_or_else(|| Error::Usage("no degree window".into()))?;
    let comp = compute_tr(&ctx, level, &rep, &window)?;
    let mut doc = comp.document.clone();
    let mut ok = true;
    if cfg.verify {
        let report = verify(&ctx, level, &rep, &window, &comp)?;
        ok = report.passes();
        doc.verification = Some(report);
    }
    Ok((doc, ok))
}

fn exit_for(e: &Error) -> i32 {
    if e.is_internal() {
        EXIT_INTERNAL
    } else {
        EXIT_USAGE
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("TRCALC_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("TRCALC_THREADS={v} is not a positive integer")))?;
    // A pool may already exist when running inside tests; that is fine.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn execute(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::Invariant(format!("write failed: {e}"));
    match cfg.subcommand {
        SubcommandKind::Rep => {
            let rep = cfg.build_rep(cfg.primes[0], 1)?;
            writeln!(out, "{rep}").map_err(io)?;
            Ok(EXIT_OK)
        }
        SubcommandKind::Compute => {
            let (doc, ok) = compute_document(cfg, cfg.primes[0], cfg.chromatic[0], cfg.levels[0])?;
            out.write_all(emit(&doc, cfg.format).as_bytes())
                .map_err(io)?;
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
        }
        SubcommandKind::Sweep => {
            let mut code = EXIT_OK;
            for &p in &cfg.primes {
                for &c in &cfg.chromatic {
                    for &level in &cfg.levels {
                        let (doc, ok) = compute_document(cfg, p, c, level)?;
                        let line = serde_json::to_string(&doc)
                            .map_err(|e| Error::Invariant(e.to_string()))?;
                        writeln!(out, "{line}").map_err(io)?;
                        if !ok {
                            code = EXIT_VERIFY;
                        }
                    }
                }
            }
            Ok(code)
        }
        SubcommandKind::Verify => {
            let report = run_acceptance()?;
            for c in &report.criteria {
                writeln!(out, "{c}").map_err(io)?;
            }
            writeln!(out, "supplement: {}", report.shift_from_shift_bound).map_err(io)?;
            let all = report.criteria.iter().all(|c| c.passed);
            if !all {
                writeln!(err, "some criteria failed").map_err(io)?;
            }
            Ok(if all { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Run the program on `argv`, writing to the given streams; returns the exit
/// code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse(argv) {
        Ok(cfg) => cfg,
        Err(ParseOutcome::Clap(e)) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
        Err(ParseOutcome::Invalid(e)) => {
            let _ = writeln!(err, "error: {e}");
            return exit_for(&e);
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    match execute(&cfg, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    }
}
