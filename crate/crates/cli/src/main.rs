use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::process::ExitCode;

use borel_core::codes::{BorelCode, Point, RankCheck};
use borel_core::decorate::{decorate, DecorationFamily};
use borel_core::eval::{evaluate, solve_strategy, EvalOutcome};
use borel_core::graphs::{
    color_count, konig_color, perfect_matching, two_color, vizing_color, EdgeColoring, FinGraph,
    MatchingResult, TwoColoring,
};
use borel_core::lalpha::{build_hierarchy, code_of_definable, parse_formula, DEFAULT_CAP};
use borel_core::ordinals::Ordinal;
use borel_core::ramsey::{adversary_coloring, sample_partitions};
use borel_core::stagecraft::{edge1_gadget, hat_strategy, wo_gadget, StageRegistry};
use borel_core::syntax::{parse_code_file, parse_family_file, print_code};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "borel", about = "Borel codes, evaluation games and their combinatorial shadows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a code at an eventually periodic point.
    Eval {
        #[arg(long)]
        code: String,
        /// `prefix;period`, e.g. `01;1`
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 64)]
        fuel: usize,
        /// Print the evaluation map as `address bit` lines.
        #[arg(long)]
        witness: bool,
    },
    /// Print a winning strategy for the evaluation game.
    Strategy {
        #[arg(long)]
        code: String,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 64)]
        fuel: usize,
    },
    /// Print the code of the complement.
    Negate {
        #[arg(long)]
        code: String,
    },
    /// Decorate a ranked code with a family of ranked codes.
    Decorate {
        #[arg(long)]
        code: String,
        #[arg(long)]
        family: String,
    },
    /// Check rank annotations against a bound.
    RankCheck {
        #[arg(long)]
        code: String,
        #[arg(long)]
        bound: String,
    },
    /// The finite constructible hierarchy.
    Lalpha {
        #[command(subcommand)]
        op: LalphaOp,
    },
    /// Finite graph algorithms on a graph file.
    Graphs {
        #[arg(value_enum)]
        op: GraphOp,
        file: String,
    },
    /// Run the hat game or build a non-extendability gadget
    Simulate {
        #[command(subcommand)]
        what: Simulation,
    },
    /// Dual Ramsey adversary over staged partitions
    Ramsey {
        #[command(subcommand)]
        op: RamseyOp,
    },
}

#[derive(Subcommand)]
enum LalphaOp {
    /// Print the levels of the hierarchy.
    Build {
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Print the code for the reals represented by elements satisfying a formula.
    Code {
        #[arg(long)]
        phi: String,
        /// Level of the hierarchy to read the formula in.
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value = "x")]
        var: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphOp {
    Match,
    Vizing,
    Konig,
    Twocolor,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    Wo,
    Edge1,
}

#[derive(Subcommand)]
enum Simulation {
    /// Play the hat game.
    Hats {
        #[arg(long, default_value = "")]
        prefix: String,
        #[arg(long)]
        period: String,
        #[arg(long, default_value_t = 20)]
        n: usize,
    },
    /// Build a gadget against challenged colors.
    Gadget {
        #[arg(long, value_enum)]
        kind: GadgetKind,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// wo: `a,b`; edge1: `a-b,a-b,...`, one pair per path
        #[arg(long)]
        colors: String,
    },
}

#[derive(Subcommand)]
enum RamseyOp {
    /// Run the adversarial coloring over sample partitions.
    Adversary {
        #[arg(long, default_value_t = 3)]
        stages: u64,
        #[arg(long, default_value_t = 10)]
        partitions: usize,
    },
}

enum Failure {
    Parse(String),
    Domain(String),
}

fn parse_err(e: impl Display) -> Failure {
    Failure::Parse(e.to_string())
}

fn domain_err(e: impl Display) -> Failure {
    Failure::Domain(e.to_string())
}

type Outcome = Result<(), Failure>;

fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{path}: {e}")))
}

fn load_code(path: &str) -> Result<BorelCode, Failure> {
    parse_code_file(&read(path)?).map_err(|e| Failure::Parse(format!("{path}: {e}")))
}

fn bits(s: &str) -> Result<Vec<bool>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Failure::Parse(format!("not a bit string: {s}"))),
        })
        .collect()
}

fn print_outcome(out: &EvalOutcome, witness: bool) {
    println!("{}", out.verdict);
    if witness {
        for (a, b) in &out.witness {
            println!("{a} {}", u8::from(*b));
        }
    }
}

fn print_edge_coloring(g: &FinGraph, c: &EdgeColoring) {
    for (&(u, v), col) in c {
        println!("{} {} {col}", g.name(u), g.name(v));
    }
    println!("colors {}", color_count(c));
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Eval {
            code,
            point,
            fuel,
            witness,
        } => {
            let t = load_code(&code)?;
            let x: Point = point.parse().map_err(parse_err)?;
            print_outcome(&evaluate(&t, &x, fuel), witness);
        }
        Command::Strategy { code, point, fuel } => {
            let t = load_code(&code)?;
            let x: Point = point.parse().map_err(parse_err)?;
            print_outcome(&solve_strategy(&t, &x, fuel), true);
        }
        Command::Negate { code } => {
            let t = load_code(&code)?;
            println!("{}", print_code(&t.negate()).map_err(domain_err)?);
        }
        Command::Decorate { code, family } => {
            let t = load_code(&code)?;
            let fam = parse_family_file(&read(&family)?)
                .map_err(|e| Failure::Parse(format!("{family}: {e}")))?;
            let fam = DecorationFamily::new(fam.positives, fam.negatives, fam.bound)
                .map_err(domain_err)?;
            let d = decorate(&t, &fam).map_err(domain_err)?;
            println!("{}", print_code(&d).map_err(domain_err)?);
        }
        Command::RankCheck { code, bound } => {
            let t = load_code(&code)?;
            let bound: Ordinal = bound.parse().map_err(parse_err)?;
            match t.check_ranked(&bound).map_err(domain_err)? {
                RankCheck::Ranked => println!("RANKED"),
                RankCheck::Violation(a) => {
                    println!("VIOLATION {a}");
                    return Err(Failure::Domain(format!("rank violation at {a}")));
                }
            }
        }
        Command::Lalpha { op } => run_lalpha(op)?,
        Command::Graphs { op, file } => run_graphs(op, &file)?,
        Command::Simulate { what } => run_simulation(what)?,
        Command::Ramsey {
            op: RamseyOp::Adversary { stages, partitions },
        } => {
            let stages = stages.max(1);
            let ps = sample_partitions(partitions);
            let mut r = StageRegistry::new();
            let mut named = Vec::new();
            for (i, p) in ps.into_iter().enumerate() {
                let id = format!("p{i}");
                r.register(&id, i as u64 % stages, i as u64 / stages)
                    .map_err(domain_err)?;
                named.push((id, p));
            }
            let rep = adversary_coloring(&r, &named).map_err(domain_err)?;
            for e in &rep.entries {
                let p = &named.iter().find(|(id, _)| *id == e.id).expect("registered").1;
                println!("{} stage {} index {}: {}", e.id, e.stage, e.index, p);
                for (color, (n, q)) in e.q.iter().enumerate() {
                    println!("  color {color} n={n}: {q}");
                }
            }
            println!("monochromatic {}", rep.monochromatic);
            println!("distinct {}", if rep.all_distinct { "yes" } else { "no" });
        }
    }
    Ok(())
}

fn run_lalpha(op: LalphaOp) -> Outcome {
    match op {
        LalphaOp::Build { levels, cap } => {
            let h = build_hierarchy(levels, cap).map_err(domain_err)?;
            for (i, s) in h.iter().enumerate() {
                let names: Vec<&str> = (0..s.len()).map(|e| s.name(e)).collect();
                println!("L{i} size {}: {}", s.len(), names.join(" "));
            }
        }
        LalphaOp::Code { phi, levels, var } => {
            let formula = parse_formula(read(&phi)?.trim()).map_err(parse_err)?;
            let h = build_hierarchy(levels, DEFAULT_CAP).map_err(domain_err)?;
            let s = h.last().expect("level 0 is always present");
            let numbering = s.numbering();
            let t = code_of_definable(s, &formula, &var, &HashMap::new(), &numbering, numbering.len())
                .map_err(domain_err)?;
            let t = t.to_explicit().map_err(domain_err)?;
            println!("{}", print_code(&t).map_err(domain_err)?);
        }
    }
    Ok(())
}

fn run_graphs(op: GraphOp, file: &str) -> Outcome {
    let g = FinGraph::from_text(&read(file)?).map_err(parse_err)?;
    match op {
        GraphOp::Match => match perfect_matching(&g).map_err(domain_err)? {
            MatchingResult::Perfect(m) => {
                println!("PERFECT");
                for (u, v) in m {
                    println!("{} {}", g.name(u), g.name(v));
                }
            }
            MatchingResult::NoMatching { violator } => {
                let names: Vec<&str> = violator.iter().map(|&v| g.name(v)).collect();
                println!("NO-MATCHING violator {}", names.join(" "));
            }
        },
        GraphOp::Vizing => print_edge_coloring(&g, &vizing_color(&g)),
        GraphOp::Konig => print_edge_coloring(&g, &konig_color(&g).map_err(domain_err)?),
        GraphOp::Twocolor => match two_color(&g) {
            TwoColoring::Coloring(c) => {
                for (v, col) in c.iter().enumerate() {
                    println!("{} {col}", g.name(v));
                }
            }
            TwoColoring::OddCycle(cycle) => {
                let names: Vec<&str> = cycle.iter().map(|&v| g.name(v)).collect();
                println!("ODD-CYCLE {}", names.join(" "));
                return Err(Failure::Domain("graph is not bipartite".into()));
            }
        },
    }
    Ok(())
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Parse(format!("bad color pair '{s}'"));
    let (a, b) = s.split_once(sep).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn run_simulation(what: Simulation) -> Outcome {
    match what {
        Simulation::Hats { prefix, period, n } => {
            let hats = Point::new(bits(&prefix)?, bits(&period)?).map_err(parse_err)?;
            let out = hat_strategy(&hats, n);
            for (i, g) in out.guesses.iter().enumerate() {
                let mark = if out.errors.contains(&i) { " wrong" } else { "" };
                println!("prisoner {i} guesses {}{mark}", u8::from(*g));
            }
            println!("errors {}", out.errors.len());
        }
        Simulation::Gadget { kind, k, colors } => match kind {
            GadgetKind::Wo => {
                let (a, b) = parse_pair(&colors, ',')?;
                if a > 1 || b > 1 {
                    return Err(Failure::Domain("wo colors are 0 or 1".into()));
                }
                let gad = wo_gadget((a as u8, b as u8), ("a", "b"));
                println!("path-length {}", gad.path_length);
                print!("{}", gad.fragment.to_text());
                println!("{}", if gad.extendable { "EXTENDABLE" } else { "NOT-EXTENDABLE" });
            }
            GadgetKind::Edge1 => {
                let pairs = colors
                    .split(',')
                    .map(|p| parse_pair(p, '-'))
                    .collect::<Result<Vec<_>, _>>()?;
                let gad = edge1_gadget(k, &pairs).map_err(domain_err)?;
                println!("N={}", gad.n);
                println!("category {} {}", gad.category.0, gad.category.1);
                let chosen: Vec<String> = gad.chosen.iter().map(usize::to_string).collect();
                println!("chosen {}", chosen.join(" "));
                print!("{}", gad.fragment.to_text());
                println!("{}", if gad.extendable { "EXTENDABLE" } else { "NOT-EXTENDABLE" });
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(m)) => {
            eprintln!("parse error: {m}");
            ExitCode::from(2)
        }
    }
}
