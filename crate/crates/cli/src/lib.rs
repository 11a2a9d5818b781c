//! The `gwrf` command-line tool.
//!
//! Exit status: 0 for success and certified answers (including "not residually
//! finite"), 2 when a search is exhausted or a verdict is unknown, 1 for input
//! errors and rejected certificates.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use graphwreath::format::{
    self, element_literal, gamma_literal, group_element_literal, parse_element_literal, parse_gamma, parse_instance,
    parse_vertex, read_document, read_header, show_element, show_word, vertex_name, write_document, InstanceFile,
};
use graphwreath::gamma_graph::{quotient_graph, GammaGraph, GammaImage, Subgroup, Vertex};
use graphwreath::groups::GroupElement;
use graphwreath::lef::{lef_certificate, verify_lef, LefCertificate, LefError};
use graphwreath::rf::{
    check_finitely_presented, classify, classify_wreath, recheck_verdict, Evidence, Outcome, Verdict,
};
use graphwreath::wreath::{
    gw_compose, gw_invert, separate, verify_certificate, verify_witness, witness, Instance, NonRFWitness,
    KeptOrbits, RFCertificate, SeparationError, WitnessError, WitnessKind, WitnessParams, WreathElement,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "gwrf", version, about = "Residual finiteness of graph wreath products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Modulus search bound.
    #[arg(long, global = true, default_value_t = 64)]
    bound: u64,
    /// Largest offset examined individually for factorial families.
    #[arg(long, global = true)]
    t_max: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the normal form of an element.
    Normalize {
        instance: PathBuf,
        #[arg(long)]
        element: String,
    },
    /// Multiply two elements.
    Mul {
        instance: PathBuf,
        /// Give twice: the left factor, then the right factor.
        #[arg(long, required = true)]
        element: Vec<String>,
    },
    /// Invert an element.
    Invert {
        instance: PathBuf,
        #[arg(long)]
        element: String,
    },
    /// Classify the instance.
    Check {
        instance: PathBuf,
        /// Use the complete-graph criterion.
        #[arg(long)]
        wreath: bool,
    },
    /// Decide finite presentability.
    CheckFp { instance: PathBuf },
    /// Map an element nontrivially to a finite quotient.
    Separate {
        instance: PathBuf,
        #[arg(long)]
        element: String,
    },
    /// Build a witness against residual finiteness.
    Witness {
        instance: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: Option<String>,
        /// Vertex group element, written as in instance files.
        #[arg(long)]
        g: Option<String>,
        #[arg(long)]
        h: Option<String>,
    },
    /// Print the quotient graph by the subgroup `m·Z^n`.
    Quotient {
        instance: PathBuf,
        #[arg(long)]
        modulus: u64,
    },
    /// Build a LEF certificate for finite sets of acting elements and vertices.
    Lef {
        instance: PathBuf,
        /// Acting elements, separated by ';' (e.g. "0;1").
        #[arg(long, allow_hyphen_values = true)]
        act: String,
        /// Vertices, separated by ';' (e.g. "a:0;a:1").
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        vertices: String,
    },
    /// Re-verify a structured certificate against an instance.
    Verify { instance: PathBuf, certificate: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    VertexCommutator,
    PairCommutator,
    OrbitRatio,
}

impl From<KindArg> for WitnessKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::VertexCommutator => WitnessKind::VertexCommutator,
            KindArg::PairCommutator => WitnessKind::PairCommutator,
            KindArg::OrbitRatio => WitnessKind::OrbitRatio,
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn undecided(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_UNDECIDED, message: message.into() }
}

/// The rendered result and its exit status.
struct Report {
    text: String,
    structured: String,
    code: i32,
}

fn load(path: &PathBuf) -> Result<InstanceFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn element(file: &InstanceFile, name: &str) -> Result<WreathElement, Failure> {
    if let Some(x) = file.elements.get(name) {
        return Ok(x.clone());
    }
    if name.trim_start().starts_with('{') {
        return parse_element_literal(&file.instance, name).map_err(|e| input(e.to_string()));
    }
    let known: Vec<&str> = file.elements.keys().map(String::as_str).collect();
    Err(input(format!("no element named {name:?} (known: {})", known.join(", "))))
}

fn group_element(instance: &Instance, literal: &str) -> Result<GroupElement, Failure> {
    let text = format!("{{ word = [{{ v = {v}, g = {literal} }}] }}", v = any_vertex_literal(instance)?);
    let x = parse_element_literal(instance, &text).map_err(|e| input(format!("bad vertex group element: {e}")))?;
    Ok(x.word.syllables()[0].value.clone())
}

fn any_vertex_literal(instance: &Instance) -> Result<String, Failure> {
    match &instance.graph {
        GammaGraph::Translation(t) => {
            t.labels().first().map(|l| format!("\"{l}:0\"")).ok_or_else(|| input("the graph has no vertices"))
        }
        GammaGraph::Finite(f) if f.vertex_count() > 0 => Ok("0".into()),
        GammaGraph::Finite(_) => Err(input("the graph has no vertices")),
    }
}

fn element_report(kind: &str, instance: &Instance, x: &WreathElement) -> Report {
    Report {
        text: format!("{}\nliteral: {}\n", show_element(instance, x), element_literal(instance, x)),
        structured: write_document(kind, x),
        code: EXIT_OK,
    }
}

fn verdict_text(instance: &Instance, verdict: &Verdict) -> String {
    let mut out = format!("{verdict}\n");
    let name = |c: usize| match &instance.graph {
        GammaGraph::Translation(t) => t.labels()[c].clone(),
        GammaGraph::Finite(_) => c.to_string(),
    };
    let status = |o: &Outcome| match o {
        Outcome::Holds => "holds",
        Outcome::Fails { .. } => "fails",
        Outcome::Unknown => "unknown",
    };
    match verdict {
        Verdict::ResiduallyFinite { evidence: Evidence::Wreath { reason } } => {
            let _ = writeln!(out, "complete graph: {reason}");
        }
        Verdict::ResiduallyFinite { evidence: Evidence::Conditions { neighbourhood, pair } } => {
            let branch = if neighbourhood.abelian { "abelian vertex group" } else { "non-abelian vertex group" };
            let _ = writeln!(out, "neighbourhood condition: {} ({branch})", status(&neighbourhood.outcome));
            if let Some(rule) = &neighbourhood.edge_rule {
                let _ = writeln!(out, "  edge rule: {rule}");
            }
            for l in &neighbourhood.labels {
                match l.loop_free_modulus {
                    Some(m) => {
                        let _ = writeln!(out, "  orbit {}: loop-free modulus {m}", name(l.label));
                    }
                    None => {
                        let _ = writeln!(out, "  orbit {}: no loop-free modulus", name(l.label));
                    }
                }
            }
            if let Some(k) = &neighbourhood.subgroup {
                let _ = writeln!(out, "  subgroup: {}", subgroup_text(instance, k));
            }
            let _ = match &instance.graph {
                GammaGraph::Translation(_) => writeln!(
                    out,
                    "pair condition: {} (offsets examined up to {})",
                    status(&pair.outcome),
                    pair.t_max
                ),
                GammaGraph::Finite(_) => writeln!(out, "pair condition: {}", status(&pair.outcome)),
            };
            for p in &pair.pairs {
                let rule = p.rule.map_or("no rule".to_string(), |r| r.to_string());
                let _ = writeln!(out, "  {}-{}: {rule}", name(p.labels.0), name(p.labels.1));
                for e in &p.exceptions {
                    let _ = writeln!(out, "    offset {}: modulus {}", e.offset, e.modulus);
                }
            }
            if let Some(k) = &pair.subgroup {
                let _ = writeln!(out, "  subgroup: {}", subgroup_text(instance, k));
            }
        }
        Verdict::NotResiduallyFinite { witness } => out.push_str(&witness_text(instance, witness)),
        Verdict::Unknown { .. } => {}
    }
    out
}

fn witness_text(instance: &Instance, w: &NonRFWitness) -> String {
    let vertices: Vec<String> = w.vertices.iter().map(|v| vertex_name(instance, v)).collect();
    let values: Vec<String> = w.delta_elements.iter().map(group_element_literal).collect();
    format!(
        "witness: {} at {} with {}\nelement: {}\nobstruction: {}\n",
        w.kind,
        vertices.join(", "),
        values.join(", "),
        show_element(instance, &w.element),
        w.obstruction
    )
}

fn subgroup_text(instance: &Instance, k: &Subgroup) -> String {
    match k {
        Subgroup::Modulus { modulus } => lattice(*modulus, instance.graph.rank()),
        Subgroup::Image { generators, modulus } => {
            let base = if generators.is_empty() {
                "kernel of the action".to_string()
            } else {
                let gens: Vec<String> = generators.iter().map(gamma_literal).collect();
                format!("preimage of <{}>", gens.join(", "))
            };
            if *modulus == 1 {
                base
            } else {
                format!("{base} intersected with {}", lattice(*modulus, instance.graph.rank()))
            }
        }
    }
}

fn lattice(modulus: u64, rank: usize) -> String {
    if rank == 1 {
        format!("{modulus}Z")
    } else {
        format!("{modulus}Z^{rank}")
    }
}

fn joined(items: Vec<String>) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(" ")
    }
}

fn gamma_image_text(image: &GammaImage) -> String {
    let residues = image.residues.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    match &image.coset {
        Some(p) => format!("{residues}, acting as {}", group_element_literal(&GroupElement::Perm(p.clone()))),
        None => residues,
    }
}

fn certificate_text(instance: &Instance, cert: &RFCertificate) -> String {
    let q = &cert.quotient;
    let original = |v: &Vertex| match (&cert.kept, v) {
        (KeptOrbits::Labels(keep), Vertex::Translation { label, position }) => Vertex::at(keep[*label], *position),
        (KeptOrbits::Vertices(keep), Vertex::Finite(id)) => Vertex::Finite(keep[*id]),
        _ => v.clone(),
    };
    let support: Vec<String> = cert.support.iter().map(|v| vertex_name(instance, &original(v))).collect();
    let orbits: Vec<String> = cert.support_orbits.iter().map(ToString::to_string).collect();
    format!(
        "element: {}\nsubgroup: {}\nquotient: {} vertices, {} edges, {} loops\nsupport: {} -> orbits {}\nimage: ({}; {})\nchecks: acting element kept {}, support isomorphism {}, loop-free {}, nontrivial image {}\n",
        show_element(instance, &cert.element),
        subgroup_text(instance, &cert.subgroup),
        q.vertex_count(),
        q.edges.len(),
        q.loops.len(),
        joined(support),
        joined(orbits),
        show_word(&cert.word_image, ToString::to_string),
        gamma_image_text(&cert.gamma_image),
        cert.checks.gamma_injective,
        cert.checks.support_isomorphism,
        cert.checks.loop_free,
        cert.checks.image_nontrivial,
    )
}

fn lef_text(instance: &Instance, cert: &LefCertificate) -> String {
    let mut out = format!("Q = {}\nY: {} vertices, {} edges\n", cert.q, cert.y.vertex_count(), cert.y.edges.len());
    for (g, q) in &cert.phi {
        let _ = writeln!(out, "phi({}) = {}", gamma_literal(g), group_element_literal(q));
    }
    for (v, y) in &cert.psi {
        let _ = writeln!(out, "psi({}) = {y}", vertex_name(instance, v));
    }
    if let Some(t) = &cert.truncation {
        let offsets: Vec<String> = t.offsets().iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "truncated offsets: {{{}}}", offsets.join(", "));
    }
    out
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty())
}

fn execute(cli: &Cli) -> Result<Report, Failure> {
    let bound = cli.bound;
    match &cli.command {
        Command::Normalize { instance, element: name } => {
            let file = load(instance)?;
            let x = element(&file, name)?;
            Ok(element_report("element", &file.instance, &x))
        }
        Command::Mul { instance, element: names } => {
            let file = load(instance)?;
            let [a, b] = names.as_slice() else { return Err(input("mul needs exactly two --element values")) };
            let (x, y) = (element(&file, a)?, element(&file, b)?);
            let xy = gw_compose(&file.instance, &x, &y).map_err(|e| input(e.to_string()))?;
            Ok(element_report("element", &file.instance, &xy))
        }
        Command::Invert { instance, element: name } => {
            let file = load(instance)?;
            let x = element(&file, name)?;
            let inv = gw_invert(&file.instance, &x).map_err(|e| input(e.to_string()))?;
            Ok(element_report("element", &file.instance, &inv))
        }
        Command::Check { instance, wreath } => {
            let file = load(instance)?;
            let verdict = if *wreath {
                classify_wreath(&file.instance).map_err(|e| input(e.to_string()))?
            } else {
                classify(&file.instance, bound, cli.t_max)
            };
            let code = if matches!(verdict, Verdict::Unknown { .. }) { EXIT_UNDECIDED } else { EXIT_OK };
            Ok(Report {
                text: verdict_text(&file.instance, &verdict),
                structured: write_document("verdict", &verdict),
                code,
            })
        }
        Command::CheckFp { instance } => {
            let file = load(instance)?;
            let report = check_finitely_presented(&file.instance);
            let mut text =
                if report.finitely_presented { "FINITELY PRESENTED\n" } else { "NOT FINITELY PRESENTED\n" }.to_string();
            for c in &report.conditions {
                let _ = writeln!(text, "  [{}] {}: {}", if c.holds { "ok" } else { "fails" }, c.name, c.reason);
            }
            Ok(Report { text, structured: write_document("presentation", &report), code: EXIT_OK })
        }
        Command::Separate { instance, element: name } => {
            let file = load(instance)?;
            let x = element(&file, name)?;
            match separate(&file.instance, &x, bound) {
                Ok(cert) => Ok(Report {
                    text: certificate_text(&file.instance, &cert),
                    structured: write_document("separation", &cert),
                    code: EXIT_OK,
                }),
                Err(e @ SeparationError::SearchExhausted { .. }) => Err(undecided(e.to_string())),
                Err(e) => Err(input(e.to_string())),
            }
        }
        Command::Witness { instance, kind, v, w, g, h } => {
            let file = load(instance)?;
            let inst = &file.instance;
            let params = WitnessParams {
                v: Some(parse_vertex(inst, v).map_err(input)?),
                w: w.as_deref().map(|w| parse_vertex(inst, w)).transpose().map_err(input)?,
                g: g.as_deref().map(|g| group_element(inst, g)).transpose()?,
                h: h.as_deref().map(|h| group_element(inst, h)).transpose()?,
            };
            match witness(inst, (*kind).into(), &params) {
                Ok(wit) => Ok(Report {
                    text: witness_text(inst, &wit),
                    structured: write_document("witness", &wit),
                    code: EXIT_OK,
                }),
                Err(e @ WitnessError::NotCertifiable(_)) => Err(undecided(e.to_string())),
                Err(e) => Err(input(e.to_string())),
            }
        }
        Command::Quotient { instance, modulus } => {
            let file = load(instance)?;
            let inst = &file.instance;
            let q = quotient_graph(&inst.graph, &Subgroup::Modulus { modulus: *modulus }).map_err(|e| input(e.to_string()))?;
            let mut text = format!("{} vertices\n", q.vertex_count());
            for (i, lift) in q.lifts.iter().enumerate() {
                let _ = writeln!(text, "  {i}: orbit of {}", vertex_name(inst, lift));
            }
            let edges: Vec<String> = q.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
            let loops: Vec<String> = q.loops.iter().map(ToString::to_string).collect();
            let _ = writeln!(text, "edges: {}\nloops: {}", joined(edges), joined(loops));
            Ok(Report { text, structured: write_document("quotient", &q), code: EXIT_OK })
        }
        Command::Lef { instance, act, vertices } => {
            let file = load(instance)?;
            let inst = &file.instance;
            let a = split_list(act).map(|g| parse_gamma(inst, g)).collect::<Result<Vec<_>, _>>().map_err(input)?;
            let e = split_list(vertices).map(|v| parse_vertex(inst, v)).collect::<Result<Vec<_>, _>>().map_err(input)?;
            match lef_certificate(&inst.graph, &a, &e, bound) {
                Ok(cert) => Ok(Report {
                    text: lef_text(inst, &cert),
                    structured: write_document("lef", &cert),
                    code: EXIT_OK,
                }),
                Err(e @ LefError::SearchExhausted { .. }) => Err(undecided(e.to_string())),
                Err(e) => Err(input(e.to_string())),
            }
        }
        Command::Verify { instance, certificate } => {
            let file = load(instance)?;
            let inst = &file.instance;
            let text = std::fs::read_to_string(certificate)
                .map_err(|e| input(format!("{}: {e}", certificate.display())))?;
            let kind = read_header(&text).map_err(|e| input(e.to_string()))?.kind;
            let doc = |e: format::FormatError| input(e.to_string());
            let valid = match kind.as_str() {
                "separation" => {
                    let cert: RFCertificate = read_document(&text, &kind).map_err(doc)?;
                    verify_certificate(inst, &cert).map_err(|e| input(e.to_string()))?;
                    true
                }
                "witness" => verify_witness(inst, &read_document(&text, &kind).map_err(doc)?),
                "lef" => {
                    let cert: LefCertificate = read_document(&text, &kind).map_err(doc)?;
                    let a: Vec<_> = cert.phi.iter().map(|p| p.0.clone()).collect();
                    let e: Vec<Vertex> = cert.psi.iter().map(|p| p.0.clone()).collect();
                    verify_lef(&cert, &inst.graph, &a, &e)
                }
                "verdict" => recheck_verdict(inst, &read_document(&text, &kind).map_err(doc)?),
                other => return Err(input(format!("cannot verify documents of kind {other:?}"))),
            };
            if !valid {
                return Err(input(format!("{kind} certificate rejected")));
            }
            #[derive(Serialize)]
            struct Verified<'a> {
                kind: &'a str,
                valid: bool,
            }
            Ok(Report {
                text: format!("{kind} certificate verified\n"),
                structured: write_document("verification", &Verified { kind: &kind, valid }),
                code: EXIT_OK,
            })
        }
    }
}

/// Runs the tool on the given arguments (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let (body, code) = match execute(&cli) {
        Ok(report) => {
            let body = match cli.format {
                OutputFormat::Text => report.text,
                OutputFormat::Structured => report.structured,
            };
            (Some(body), report.code)
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            (None, f.code)
        }
    };
    if let Some(body) = body {
        match &cli.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, body) {
                    let _ = writeln!(err, "error: {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            }
            None => {
                let _ = out.write_all(body.as_bytes());
            }
        }
    }
    code
}
