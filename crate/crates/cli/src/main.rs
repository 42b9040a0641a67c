//! Command-line front end: parse words into pairs, inspect Whitehead
//! graphs, decide irreducibility, export the cone, optimize the rank
//! functional, search for surface certificates and re-check them.
//!
//! Exit codes: 0 success, 1 rejection or verification failure, 2 malformed
//! input, 3 enumeration cap or budget abort.

use std::fs;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pairrank::json;
use pairrank::{
    build_cone, classify, enumerate_pieces, enumerate_pstars, find_surface, maximize_rank,
    minimize_rank, parse_words, unfold_to_locally_irreducible, verify_certificate,
    whitehead_system, ChiMode, EnumCaps, Error, GraphPair, SearchBudgets, SurfaceSearch,
    UnfoldOutcome, WhClassification,
};

#[derive(Parser)]
#[command(name = "pairrank", version, about = "Irreducibility, exact rank optimization and surface certificates for tuples of cyclic words in free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Json,
    Dot,
    Lp,
}

#[derive(Args)]
struct InputArgs {
    /// Rank of the free group (rose base), used with --words.
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated cyclically reduced words over a..z / A..Z.
    #[arg(long, value_delimiter = ',')]
    words: Vec<String>,
    /// Pair JSON file; alternative to --rank/--words.
    #[arg(long)]
    pair: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format where applicable.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct CapArgs {
    /// Piece-size cap: Whitehead edges per piece.
    #[arg(long, default_value_t = 12)]
    piece_cap: usize,
    /// Total star cap for enumeration.
    #[arg(long, default_value_t = 100_000)]
    star_cap: usize,
}

impl CapArgs {
    fn caps(&self) -> EnumCaps {
        EnumCaps {
            max_piece_edges: self.piece_cap,
            max_pieces: self.star_cap,
            max_stars: self.star_cap,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse input and emit canonical pair JSON (or base-graph DOT).
    Parse(InputArgs),
    /// Per-vertex Whitehead graphs: classification, DOT or JSON export.
    Whitehead(InputArgs),
    /// Decide irreducibility by unfolding, reporting the witness.
    Analyze(InputArgs),
    /// Enumerate pieces and stars and export the cone.
    Cone {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        caps: CapArgs,
    },
    /// Optimize the rank functional over the cone, exactly.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        caps: CapArgs,
        /// Maximize (the default).
        #[arg(long, conflicts_with = "min")]
        max: bool,
        /// Minimize instead of maximizing.
        #[arg(long)]
        min: bool,
    },
    /// Run the full surface search and write a certificate.
    Surface {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        caps: CapArgs,
        /// Cap on optimal-face vertices to visit.
        #[arg(long, default_value_t = 64)]
        face_budget: usize,
        /// Cap on pairs visited by the unfolding search per vertex.
        #[arg(long, default_value_t = 1000)]
        unfold_budget: usize,
    },
    /// Re-check a certificate file ("-" reads stdin).
    Verify {
        cert: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Truncated(_) => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn load_pair(input: &InputArgs) -> Result<GraphPair, Error> {
    match (&input.pair, input.rank) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Json(e.to_string()))?;
            json::pair_from_value(&value)
        }
        (None, Some(rank)) => {
            if input.words.is_empty() {
                return Err(Error::invalid("--words is required with --rank"));
            }
            let words: Vec<&str> = input.words.iter().map(|s| s.as_str()).collect();
            parse_words(rank, &words)
        }
        (None, None) => Err(Error::invalid("provide --rank/--words or --pair")),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Parse(input) => {
            let pair = load_pair(&input)?;
            for v in pair.untouched_vertices() {
                eprintln!("note: vertex {v} carries no circle vertices; the pair is reducible");
            }
            let text = match input.format {
                Format::Dot => pair.base.to_dot("base"),
                _ => json::to_pretty_string(&json::pair_to_value(&pair)),
            };
            emit(&input.out, &text)?;
            Ok(0)
        }
        Command::Whitehead(input) => {
            let pair = load_pair(&input)?;
            let ws = whitehead_system(&pair);
            for (x, wh) in &ws.graphs {
                let verdict = match classify(wh) {
                    WhClassification::Irreducible => "irreducible".to_string(),
                    WhClassification::Disconnected { components } => {
                        format!("disconnected ({} components)", components.len())
                    }
                    WhClassification::HasLeaf { vertex } => format!("leaf at {vertex}"),
                    WhClassification::HasCutVertex { cut, .. } => {
                        format!("cut vertex at {cut}")
                    }
                };
                eprintln!(
                    "vertex {x}: {} turn vertices, {} edges, {verdict}",
                    wh.vertices.len(),
                    wh.edges.len()
                );
            }
            let text = match input.format {
                Format::Dot => {
                    let mut s = String::new();
                    for wh in ws.graphs.values() {
                        s.push_str(&wh.to_dot());
                    }
                    s
                }
                _ => json::to_pretty_string(&json::whitehead_system_to_value(&ws)),
            };
            emit(&input.out, &text)?;
            Ok(0)
        }
        Command::Analyze(input) => {
            let pair = load_pair(&input)?;
            match unfold_to_locally_irreducible(&pair)? {
                UnfoldOutcome::LocallyIrreducible { steps, .. } => {
                    println!("Irreducible (locally irreducible after {steps} unfolds)");
                }
                UnfoldOutcome::Reducible(w) => {
                    let what = match &w.classification {
                        WhClassification::Disconnected { .. } => {
                            "disconnected Whitehead graph".to_string()
                        }
                        WhClassification::HasLeaf { vertex } => format!("leaf at {vertex}"),
                        other => format!("{other:?}"),
                    };
                    println!(
                        "Reducible ({what} at vertex {} after {} unfolds)",
                        w.vertex, w.after_steps
                    );
                }
            }
            Ok(0)
        }
        Command::Cone { input, caps } => {
            let pair = load_pair(&input)?;
            let ws = whitehead_system(&pair);
            let piece_set = enumerate_pieces(&ws, &caps.caps());
            if piece_set.truncated {
                return Err(Error::Truncated("piece enumeration hit its cap".into()));
            }
            let star_set = enumerate_pstars(&piece_set, &ws, &caps.caps());
            if star_set.truncated {
                return Err(Error::Truncated("star enumeration hit its cap".into()));
            }
            let cone = build_cone(&piece_set, &star_set, &ws, ChiMode::MiddleGraph)?;
            eprintln!(
                "{} pieces, {} stars, {} gluing rows, {} admissibility rows",
                cone.pieces.len(),
                cone.stars.len(),
                cone.gluing_rows.len(),
                cone.admissibility_rows.len()
            );
            let text = match input.format {
                Format::Lp => cone.to_lp_text(),
                _ => {
                    let v = serde_json::json!({
                        "pieces": cone.pieces.len(),
                        "stars": cone.stars.len(),
                        "gluing_rows": cone.gluing_rows.len(),
                        "admissibility_rows": cone.admissibility_rows.len(),
                        "whitehead_edges": cone.wh_edges.len(),
                    });
                    json::to_pretty_string(&v)
                }
            };
            emit(&input.out, &text)?;
            Ok(0)
        }
        Command::Rank { input, caps, max, min } => {
            let _ = max;
            let pair = load_pair(&input)?;
            let ws = whitehead_system(&pair);
            let piece_set = enumerate_pieces(&ws, &caps.caps());
            if piece_set.truncated {
                return Err(Error::Truncated("piece enumeration hit its cap".into()));
            }
            let star_set = enumerate_pstars(&piece_set, &ws, &caps.caps());
            if star_set.truncated {
                return Err(Error::Truncated("star enumeration hit its cap".into()));
            }
            let cone = build_cone(&piece_set, &star_set, &ws, ChiMode::MiddleGraph)?;
            let result = if min { minimize_rank(&cone)? } else { maximize_rank(&cone)? };
            match result.status {
                pairrank::LpStatus::Optimal => {
                    println!("{}", json::rational_to_string(&result.optimum));
                    let v = serde_json::json!({
                        "status": "optimal",
                        "value": json::rational_to_string(&result.optimum),
                        "vertex": result
                            .vertex
                            .iter()
                            .map(json::rational_to_string)
                            .collect::<Vec<_>>(),
                        "basis": result.basis,
                        "pivots": result.pivots,
                    });
                    emit(&input.out, &json::to_pretty_string(&v))?;
                    Ok(0)
                }
                pairrank::LpStatus::ZeroCone => {
                    println!("zero cone");
                    Ok(1)
                }
                pairrank::LpStatus::Infeasible => {
                    println!("infeasible");
                    Ok(1)
                }
            }
        }
        Command::Surface { input, caps, face_budget, unfold_budget } => {
            let pair = load_pair(&input)?;
            let budgets = SearchBudgets { caps: caps.caps(), face_budget, unfold_budget };
            match find_surface(&pair, &budgets)? {
                SurfaceSearch::Reducible(w) => {
                    eprintln!(
                        "rejected: pair is reducible (witness at vertex {} after {} unfolds)",
                        w.vertex, w.after_steps
                    );
                    Ok(1)
                }
                SurfaceSearch::Report(report) => {
                    eprintln!(
                        "rho+ = {} ({} face vertices tried{})",
                        json::rational_to_string(&report.rho_plus),
                        report.vertices_tried,
                        if report.face_exhaustive { ", face exhausted" } else { "" }
                    );
                    match report.certificate {
                        Some(cert) => {
                            eprintln!(
                                "surface form found: euler {}, {} boundary circles, degree {}",
                                cert.euler, cert.boundary_count, cert.degree
                            );
                            let text =
                                json::to_pretty_string(&json::certificate_to_value(&cert));
                            emit(&input.out, &text)?;
                            Ok(0)
                        }
                        None => {
                            eprintln!("no surface form found within budget");
                            Ok(1)
                        }
                    }
                }
            }
        }
        Command::Verify { cert, caps } => {
            let text = if cert.as_os_str() == "-" {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| Error::Invalid(e.to_string()))?;
                buf
            } else {
                fs::read_to_string(&cert)
                    .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", cert.display())))?
            };
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Json(e.to_string()))?;
            let certificate = json::certificate_from_value(&value)?;
            let violations = verify_certificate(&certificate, &caps.caps());
            if violations.is_empty() {
                println!("certificate OK");
                Ok(0)
            } else {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                println!("certificate REJECTED ({} violations)", violations.len());
                Ok(1)
            }
        }
    }
}
