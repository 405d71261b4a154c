//! Command-line front end. Every analysis subcommand writes one [`RunReport`].
//!
//! Exit codes: 0 success, 1 negative verdict, 2 input error, 3 numerical failure.

use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::catalog;
use crate::cohomology::{self, betti_from_coboundary_ranks, CohomologyError};
use crate::geomech::{GeomechError, SystemDefinition};
use crate::io::{load_mesh, CochainDocument, DocumentError, MeshDocument};
use crate::mesh::generators::{flat_torus, klein_bottle, octahedron, synthetic_form};
use crate::mesh::{Cochain, SimplicialComplex};
use crate::report::{fmt_f64, to_value, InputDigest, RunReport, Table};
use crate::tischler::{fibrate, CertifyOptions, FibrateOptions, TischlerError};
use crate::torus::{fiber_verdict, FiberOptions, LatticeOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GeomechError> for CliError {
    fn from(e: GeomechError) -> Self {
        match e {
            GeomechError::Eval(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CohomologyError> for CliError {
    fn from(e: CohomologyError) -> Self {
        match e {
            CohomologyError::Mesh(_) | CohomologyError::NotClosed { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<TischlerError> for CliError {
    fn from(e: TischlerError) -> Self {
        match e {
            TischlerError::Mesh(_) | TischlerError::MapShape | TischlerError::MapDimension { .. } => {
                CliError::Input(e.to_string())
            }
            TischlerError::Cohomology(c) => c.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "torifold", version, about = "Closed 1-forms, torus fibrations and Liouville tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Report destination; `-` writes to standard output.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeshKind {
    Torus,
    Klein,
    Octahedron,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a built-in mesh document.
    GenMesh {
        #[arg(value_enum)]
        kind: MeshKind,
        /// Grid resolution for the torus and Klein bottle.
        #[arg(long, default_value_t = 8)]
        res: usize,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Write the 1-cochain `sum_i a_i dx_i + dF` for a random vertex potential `F`.
    GenForm {
        #[arg(long, default_value = "-")]
        mesh: String,
        /// Comma-separated coefficients `a_i` of the coordinate forms.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        coefficients: Vec<f64>,
        /// Half-width of the uniform vertex potential.
        #[arg(long, default_value_t = 0.0)]
        potential: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Betti number, cycle and cohomology bases, and periods of optional forms.
    Cohomology {
        #[arg(long, default_value = "-")]
        mesh: String,
        #[arg(long, num_args = 1..)]
        forms: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Build and certify the torus-valued map from closed forms.
    Fibrate {
        #[arg(long, default_value = "-")]
        mesh: String,
        #[arg(long, num_args = 1.., required = true)]
        forms: Vec<String>,
        /// Initial bound on the rational perturbation of the coefficients.
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Coverage bins per axis of the target torus.
        #[arg(long, default_value_t = 16)]
        bins: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Classify a system: Jacobi identity, involution and independence.
    CheckSystem {
        #[arg(long)]
        system: String,
        /// Sample count for the independence test.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Points for the Jacobi and involution residuals.
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Certify that the fibre through a level is a torus.
    DetectTorus {
        #[arg(long)]
        system: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        level: Vec<f64>,
        /// Starting point for the projection onto the level; may be repeated.
        #[arg(long = "guess", allow_hyphen_values = true, required = true)]
        guesses: Vec<String>,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

/// Standard streams of one invocation.
pub struct Streams<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// Runs the tool with process stdio and returns the exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    run_with(argv, &mut Streams { stdin: &mut stdin, stdout: &mut stdout, stderr: &mut stderr })
}

pub fn run_with<I, S>(argv: I, io: &mut Streams<'_>) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { io.stderr } else { io.stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

struct Source {
    label: String,
    bytes: Vec<u8>,
}

impl Source {
    fn text(&self) -> Result<&str, CliError> {
        std::str::from_utf8(&self.bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8", self.label)))
    }

    fn digest(&self, role: &str) -> InputDigest {
        InputDigest::new(role, &self.label, &self.bytes)
    }
}

fn read_source(input: &str, stdin: &mut dyn Read) -> Result<Source, CliError> {
    let bytes = if let Some(name) = input.strip_prefix("builtin:") {
        catalog::builtin(name)
            .ok_or_else(|| CliError::Input(format!("no bundled input named '{name}'")))?
            .as_bytes()
            .to_vec()
    } else if input == "-" {
        let mut buf = Vec::new();
        stdin.read_to_end(&mut buf).map_err(|e| CliError::Input(format!("reading standard input: {e}")))?;
        buf
    } else {
        std::fs::read(input).map_err(|e| CliError::Input(format!("reading {input}: {e}")))?
    };
    Ok(Source { label: input.to_string(), bytes })
}

fn write_target(out: &str, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    if out == "-" {
        stdout.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("writing standard output: {e}")))
    } else {
        std::fs::write(out, text).map_err(|e| CliError::Input(format!("writing {out}: {e}")))
    }
}

fn emit(report: &RunReport, output: &Output, io: &mut Streams<'_>) -> Result<i32, CliError> {
    let text = match output.format {
        Format::Json => report.render_json(),
        Format::Csv => report.render_csv().map_err(|e| CliError::Input(format!("csv: {e}")))?,
    };
    write_target(&output.out, &text, io.stdout)?;
    if output.out != "-" {
        let _ = writeln!(io.stderr, "{}: {}", report.command, report.verdict);
    }
    Ok(report.exit_code)
}

fn load_mesh_source(input: &str, stdin: &mut dyn Read) -> Result<(Source, SimplicialComplex), CliError> {
    let src = read_source(input, stdin)?;
    let mesh = load_mesh(src.text()?)?;
    Ok((src, mesh))
}

fn load_forms(inputs: &[String], mesh: &SimplicialComplex, stdin: &mut dyn Read) -> Result<(Vec<Source>, Vec<Cochain<f64>>), CliError> {
    let mut sources = Vec::new();
    let mut forms = Vec::new();
    for input in inputs {
        let src = read_source(input, stdin)?;
        let c = CochainDocument::from_json(src.text()?)?.to_f64()?;
        if c.degree() != 1 {
            return Err(CliError::Input(format!("{input}: expected a 1-cochain, got degree {}", c.degree())));
        }
        mesh.check_cochain(&c).map_err(|e| CliError::Input(format!("{input}: {e}")))?;
        sources.push(src);
        forms.push(c);
    }
    Ok((sources, forms))
}

fn load_system(input: &str, stdin: &mut dyn Read) -> Result<(Source, SystemDefinition), CliError> {
    let src = read_source(input, stdin)?;
    let sys = SystemDefinition::from_json(src.text()?).map_err(|e| CliError::Input(format!("{input}: {e}")))?;
    Ok((src, sys))
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Input(format!("'{text}' is not a comma-separated list of numbers"))))
        .collect()
}

fn dispatch(command: Command, io: &mut Streams<'_>) -> Result<i32, CliError> {
    match command {
        Command::GenMesh { kind, res, out } => {
            if res < 3 && !matches!(kind, MeshKind::Octahedron) {
                return Err(CliError::Input("--res must be at least 3".into()));
            }
            let mesh = match kind {
                MeshKind::Torus => flat_torus(res),
                MeshKind::Klein => klein_bottle(res),
                MeshKind::Octahedron => octahedron(),
            };
            write_target(&out, &MeshDocument::from_complex(&mesh).to_json(), io.stdout)?;
            Ok(EXIT_OK)
        }
        Command::GenForm { mesh, coefficients, potential, seed, out } => {
            let (_, complex) = load_mesh_source(&mesh, io.stdin)?;
            let width = complex.coords().first().map_or(0, Vec::len);
            if coefficients.len() > width {
                return Err(CliError::Input(format!("{} coefficients but vertices have {width} coordinates", coefficients.len())));
            }
            if !(potential.is_finite() && potential >= 0.0) {
                return Err(CliError::Input("--potential must be a non-negative number".into()));
            }
            let form = synthetic_form(&complex, &coefficients, potential, seed);
            write_target(&out, &CochainDocument::from_f64(&form).to_json(), io.stdout)?;
            Ok(EXIT_OK)
        }
        Command::Cohomology { mesh, forms, output } => {
            let report = cohomology_report(&mesh, &forms, io)?;
            emit(&report, &output, io)
        }
        Command::Fibrate { mesh, forms, eps, bins, output } => {
            let report = fibrate_report(&mesh, &forms, eps, bins, io)?;
            emit(&report, &output, io)
        }
        Command::CheckSystem { system, samples, points, seed, output } => {
            let report = check_system_report(&system, samples, points, seed, io)?;
            emit(&report, &output, io)
        }
        Command::DetectTorus { system, level, guesses, tmax, grid, samples, seed, output } => {
            let guesses = guesses.iter().map(|g| parse_point(g)).collect::<Result<Vec<_>, _>>()?;
            let opts = FiberOptions {
                samples,
                seed,
                lattice: LatticeOptions { t_max: tmax, grid, ..LatticeOptions::default() },
                ..FiberOptions::default()
            };
            let report = detect_torus_report(&system, &level, &guesses, &opts, io)?;
            emit(&report, &output, io)
        }
    }
}

fn row_strings(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| fmt_f64(x)).collect()
}

fn cohomology_report(mesh_input: &str, form_inputs: &[String], io: &mut Streams<'_>) -> Result<RunReport, CliError> {
    let (src, mesh) = load_mesh_source(mesh_input, io.stdin)?;
    let (form_sources, forms) = load_forms(form_inputs, &mesh, io.stdin)?;
    let (cycles, basis) = cohomology::homology(&mesh)?;
    let ranks_betti = betti_from_coboundary_ranks(&mesh);
    let tol = cohomology::DEFAULT_DECOMPOSITION_TOL;

    let mut report = RunReport::new("cohomology");
    report.inputs.push(src.digest("mesh"));
    report.inputs.extend(form_sources.iter().map(|s| s.digest("form")));
    report.parameters = json!({ "tolerance": tol });

    let mut periods = Vec::new();
    let mut coefficients = Vec::new();
    let mut residuals = Vec::new();
    let mut closed = true;
    for f in &forms {
        let (ok, _) = mesh.verify_closed(f, tol).map_err(|e| CliError::Input(e.to_string()))?;
        if !ok {
            closed = false;
            periods.push(None);
            coefficients.push(None);
            residuals.push(None);
            continue;
        }
        let row = cohomology::decompose(&mesh, f, &basis, &cycles, tol)?;
        periods.push(Some(cycles.periods(f)));
        coefficients.push(Some(row.coefficients));
        residuals.push(Some(row.residual));
    }

    let p = basis.betti;
    report.verdict = if closed { "ok" } else { "not closed" }.to_string();
    report.exit_code = if closed { EXIT_OK } else { EXIT_NEGATIVE };
    report.summary.push(format!("first Betti number {p}"));
    report.summary.push(format!(
        "{} vertices, {} edges, {} top simplices, {}",
        mesh.count(0),
        mesh.count(1),
        mesh.top_simplices().len(),
        if mesh.is_orientable() { "orientable" } else { "non-orientable" }
    ));
    report.summary.push(format!("{} fundamental cycles, {} selected", cycles.fundamental.len(), cycles.selected.len()));
    if !closed {
        report.summary.push("some forms are not closed; their periods are omitted".into());
    }
    report.result = json!({
        "dimension": mesh.dim(),
        "counts": (0..=mesh.dim()).map(|d| mesh.count(d)).collect::<Vec<_>>(),
        "orientable": mesh.is_orientable(),
        "betti": p,
        "betti_from_coboundary_ranks": ranks_betti,
        "fundamental_cycles": cycles.fundamental.len(),
        "cycles": cycles.selected.iter().map(|z| &z.edges).collect::<Vec<_>>(),
        "basis": basis.integral.iter().map(|c| c.values()).collect::<Vec<_>>(),
        "basis_periods": basis.period_matrix,
        "periods": to_value(&periods),
        "coefficients": to_value(&coefficients),
        "residuals": to_value(&residuals),
    });

    let mut t = Table::new("periods", &["form", "cycle", "period"]);
    for (i, row) in periods.iter().enumerate() {
        if let Some(row) = row {
            for (j, v) in row.iter().enumerate() {
                t.push(vec![(i + 1).to_string(), (j + 1).to_string(), fmt_f64(*v)]);
            }
        }
    }
    report.tables.push(t);
    let mut t = Table::new("basis_periods", &["class", "cycle", "period"]);
    for (i, row) in basis.period_matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t.push(vec![(i + 1).to_string(), (j + 1).to_string(), v.to_string()]);
        }
    }
    report.tables.push(t);
    Ok(report)
}

fn fibrate_report(
    mesh_input: &str,
    form_inputs: &[String],
    eps: f64,
    bins: usize,
    io: &mut Streams<'_>,
) -> Result<RunReport, CliError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Input("--eps must lie in (0, 1)".into()));
    }
    if bins == 0 {
        return Err(CliError::Input("--bins must be positive".into()));
    }
    let (src, mesh) = load_mesh_source(mesh_input, io.stdin)?;
    let (form_sources, forms) = load_forms(form_inputs, &mesh, io.stdin)?;
    let options = FibrateOptions {
        eps0: eps,
        certify: CertifyOptions { bins, ..CertifyOptions::default() },
        ..FibrateOptions::default()
    };
    let outcome = fibrate(&mesh, &forms, &options)?;

    let mut report = RunReport::new("fibrate");
    report.inputs.push(src.digest("mesh"));
    report.inputs.extend(form_sources.iter().map(|s| s.digest("form")));
    report.parameters = to_value(&options);
    report.verdict = outcome.verdict.as_str().to_string();
    report.exit_code = if outcome.verdict.is_positive() { EXIT_OK } else { EXIT_NEGATIVE };
    report.summary.push(format!("verdict: {}", report.verdict));
    if let Some(reason) = &outcome.reason {
        report.summary.push(format!("reason: {reason}"));
    }
    if let Some(c) = &outcome.coefficients {
        report.summary.push(format!("perturbation {} within bound {}", fmt_f64(c.max_perturbation), fmt_f64(c.eps_bound)));
    }
    if let Some(cert) = &outcome.certificate {
        report.summary.push(format!("coverage {} at {} bins per axis", fmt_f64(cert.coverage), cert.options.bins));
    }
    if let Some(cov) = &outcome.covering {
        report.summary.push(cov.statement.clone());
    }
    report.result = to_value(&outcome);

    let mut t = Table::new("coefficients", &["form", "class", "original", "rational", "integer"]);
    if let Some(c) = &outcome.coefficients {
        for (i, row) in c.original.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                t.push(vec![
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    fmt_f64(*a),
                    crate::report::fmt_rational(&c.rational[i][j]),
                    c.integers[i][j].to_string(),
                ]);
            }
        }
    }
    report.tables.push(t);
    if let Some(cert) = &outcome.certificate {
        let mut headers: Vec<String> = (1..=cert.k).map(|i| format!("theta{i}")).collect();
        headers.push("pieces".into());
        headers.push("components".into());
        let mut t = Table { name: "fibers".into(), headers, rows: Vec::new() };
        for f in &cert.fibers {
            let mut row = row_strings(&f.value);
            row.push(f.pieces.to_string());
            row.push(f.components.to_string());
            t.push(row);
        }
        report.tables.push(t);
    }
    Ok(report)
}

fn check_system_report(
    input: &str,
    samples: usize,
    points: usize,
    seed: u64,
    io: &mut Streams<'_>,
) -> Result<RunReport, CliError> {
    let (src, sys) = load_system(input, io.stdin)?;
    let classification = sys.classify(samples, seed);
    let pts = sys.sample_points(points, seed);
    let jacobi = sys.jacobi_residual(&pts)?;
    let involution = sys.involution_residual(&pts)?;

    let mut report = RunReport::new("check-system");
    report.inputs.push(src.digest("system"));
    report.parameters = json!({ "samples": samples, "points": points, "seed": seed });
    report.verdict = classification.verdict.clone();
    report.exit_code = if classification.is_integrable() { EXIT_OK } else { EXIT_NEGATIVE };
    report.summary.push(format!("verdict: {}", classification.verdict));
    report.summary.push(format!("Jacobi residual {} over {points} points", fmt_f64(jacobi)));
    report.summary.push(format!("involution residual {} over {points} points", fmt_f64(involution)));
    report.summary.push(format!("regular fraction {}", fmt_f64(classification.regular_fraction)));
    report.result = json!({
        "system": sys.name,
        "dimension": sys.dim,
        "integrals": sys.integral_exprs().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
        "rank": sys.rank,
        "involution_pairs": sys.involution_pairs(),
        "jacobi_residual": jacobi,
        "involution_residual": involution,
        "classification": to_value(&classification),
    });
    let mut t = Table::new("residuals", &["quantity", "value"]);
    t.push(vec!["jacobi_residual".into(), fmt_f64(jacobi)]);
    t.push(vec!["involution_residual".into(), fmt_f64(involution)]);
    t.push(vec!["regular_fraction".into(), fmt_f64(classification.regular_fraction)]);
    t.push(vec!["poisson_rank".into(), classification.poisson_rank.to_string()]);
    report.tables.push(t);
    Ok(report)
}

fn detect_torus_report(
    input: &str,
    level: &[f64],
    guesses: &[Vec<f64>],
    options: &FiberOptions,
    io: &mut Streams<'_>,
) -> Result<RunReport, CliError> {
    let (src, sys) = load_system(input, io.stdin)?;
    if level.len() != sys.integral_count() {
        return Err(CliError::Input(format!("--level has {} values, the system has {} integrals", level.len(), sys.integral_count())));
    }
    if let Some(g) = guesses.iter().find(|g| g.len() != sys.dim) {
        return Err(CliError::Input(format!("--guess has {} values, the system dimension is {}", g.len(), sys.dim)));
    }
    if options.lattice.t_max.is_nan() || options.lattice.t_max <= 0.0 || options.lattice.grid < 2 {
        return Err(CliError::Input("--tmax must be positive and --grid at least 2".into()));
    }
    let verdict = fiber_verdict(&sys, level, guesses, options);

    let mut report = RunReport::new("detect-torus");
    report.inputs.push(src.digest("system"));
    report.parameters = json!({
        "level": level,
        "guesses": guesses,
        "samples": options.samples,
        "seed": options.seed,
        "lattice": to_value(&options.lattice),
        "commutation_times": options.commutation_times,
    });
    report.verdict = verdict.verdict.clone();
    report.exit_code = if verdict.is_torus() { EXIT_OK } else { EXIT_NEGATIVE };
    report.summary.push(format!("verdict: {}", verdict.verdict));
    report.summary.push(format!("classification: {}", verdict.classification.verdict));
    if let Some(l) = &verdict.lattice {
        for b in &l.basis {
            report.summary.push(format!("period vector ({})", row_strings(b).join(", ")));
        }
    }
    report.result = json!({ "system": sys.name, "fiber": to_value(&verdict) });

    let mut t = Table::new("residuals", &["quantity", "value"]);
    let opt = |v: Option<f64>| v.map_or_else(String::new, fmt_f64);
    t.push(vec!["involution_residual".into(), opt(verdict.involution_residual)]);
    t.push(vec!["jacobi_residual".into(), opt(verdict.jacobi_residual)]);
    t.push(vec!["coframe_residual".into(), opt(verdict.coframe.as_ref().map(|c| c.pairing_residual))]);
    t.push(vec!["commutation_residual".into(), opt(verdict.commutation_residual)]);
    t.push(vec!["conservation_residual".into(), opt(verdict.lattice.as_ref().map(|l| l.conservation_residual))]);
    t.push(vec!["reconstruction_residual".into(), opt(verdict.lattice.as_ref().map(|l| l.reconstruction_residual))]);
    report.tables.push(t);
    if let Some(l) = &verdict.lattice {
        let headers: Vec<String> = std::iter::once("vector".to_string()).chain((1..=sys.rank).map(|i| format!("t{i}"))).collect();
        let mut t = Table { name: "lattice_basis".into(), headers: headers.clone(), rows: Vec::new() };
        for (i, b) in l.basis.iter().enumerate() {
            t.push(std::iter::once((i + 1).to_string()).chain(row_strings(b)).collect());
        }
        report.tables.push(t);
        let mut t = Table { name: "returns".into(), headers, rows: Vec::new() };
        for (i, r) in l.returns.iter().enumerate() {
            t.push(std::iter::once((i + 1).to_string()).chain(row_strings(r)).collect());
        }
        report.tables.push(t);
    }
    Ok(report)
}
