use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spin2::exact;
use spin2::fptas;
use spin2::gadgets;
use spin2::hardness::{self, CutInstance};
use spin2::holant;
use spin2::ising;
use spin2::num::{parse_rat, to_f64, two_pow, JsonValue};
use spin2::zerofree;
use spin2::{Multigraph, Rat, Result, SpinError, SpinParams};

#[derive(Parser)]
#[command(name = "spin2", version, about = "Exact and approximate two-spin partition functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Point {
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    #[arg(long, allow_hyphen_values = true)]
    gamma: String,
}

impl Point {
    fn params(&self) -> Result<SpinParams> {
        SpinParams::parse(&self.beta, &self.gamma)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Z_G at a uniform field (default 1), or the activity vector at a vertex
    Exact {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        field: Option<String>,
    },
    /// Activity vector and ratio at a vertex
    Ratio {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        vertex: usize,
    },
    /// Gadget whose ratio is within a factor e^eps of the target
    Realize {
        #[command(flatten)]
        point: Point,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long)]
        eps: String,
        /// auto, dense, exp or signed
        #[arg(long, default_value = "auto")]
        method: String,
        /// include the expanded graph in the output
        #[arg(long)]
        emit_graph: bool,
    },
    /// Two-terminal gadget with pair matrix N [[M0, 1], [1, M1]]
    IsingGadget {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        mstar: String,
        #[arg(long)]
        eps: String,
    },
    /// Counts minimum s-t cuts through the sign-oracle reduction
    MincutDemo {
        #[arg(long, default_value = "1/2", allow_hyphen_values = true)]
        beta: String,
        #[arg(long, default_value = "-1", allow_hyphen_values = true)]
        gamma: String,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
    },
    /// Region tags of a parameter point
    Classify {
        #[command(flatten)]
        point: Point,
    },
    /// CSV of star-graph witnesses along a line of beta values
    ZeroScan {
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        #[arg(long, allow_hyphen_values = true)]
        beta_from: String,
        #[arg(long, allow_hyphen_values = true)]
        beta_to: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// r' = radius + frac (beta - radius)
        #[arg(long, default_value = "1/10")]
        frac: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star graph with a real root in (-r', -radius)
    StarRoot {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        r_prime: String,
        #[arg(long, default_value = "1/1000000")]
        width: String,
    },
    /// Truncated-log approximation of Z_G
    Fptas {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        emit_series: Option<PathBuf>,
    },
    /// Markov chain estimate of Z_G
    Fpras {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        graph: PathBuf,
    },
    /// Holant form of Z_G with table checks
    HolantCheck {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        graph: PathBuf,
    },
}

fn read_graph(path: &Path) -> Result<Multigraph> {
    let s = std::fs::read_to_string(path).map_err(|e| SpinError::InvalidInput(format!("{}: {e}", path.display())))?;
    Multigraph::from_json(&s)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| SpinError::InvalidInput(format!("{}: {e}", path.display())))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn run(cmd: Cmd) -> Result<String> {
    match cmd {
        Cmd::Exact { point, graph, field } => {
            let p = point.params()?;
            let g = read_graph(&graph)?;
            let z = match field {
                None => exact::partition_fn_ones(&g, &p)?,
                Some(f) => exact::partition_fn_real(&g, &p, &vec![parse_rat(&f)?; g.n])?,
            };
            Ok(z.to_string())
        }
        Cmd::Ratio { point, graph, vertex } => {
            let p = point.params()?;
            let g = read_graph(&graph)?;
            let a = exact::activity_ones(&g, vertex, &p)?;
            let ratio = a.ratio().ok().map(|r| r.json());
            Ok(pretty(&json!({"activity": a.json(), "ratio": ratio})))
        }
        Cmd::Realize { point, target, eps, method, emit_graph } => {
            let p = point.params()?;
            let (target, eps) = (parse_rat(&target)?, parse_rat(&eps)?);
            let r = gadgets::realizer(&p)?;
            let realized = match method.as_str() {
                "auto" => r.realize_ratio(&target, &eps)?,
                "dense" => gadgets::Realized::Gadget(r.realize_dense(&target, &eps)?),
                "exp" => gadgets::Realized::Exp(r.realize_exp(&target, &eps)?),
                "signed" => gadgets::Realized::Exp(r.realize_signed(&target, &eps)?),
                other => return Err(SpinError::InvalidInput(format!("unknown method {other}"))),
            };
            let mut out = json!({
                "beta": p.beta.json(),
                "gamma": p.gamma.json(),
                "target": target.json(),
                "eps": eps.json(),
                "ratio": realized.ratio().json(),
                "activity": realized.activity().json(),
                "vertices": realized.vertex_count(&r),
            });
            if let gadgets::Realized::Exp(e) = &realized {
                out["iterations"] = json!(e.iterations);
                out["pieces"] = json!(e.pieces);
                out["max_bits"] = json!(e.max_bits);
            }
            if emit_graph {
                out["gadget"] = realized.gadget(&r)?.json();
            }
            Ok(pretty(&out))
        }
        Cmd::IsingGadget { point, mstar, eps } => {
            let p = point.params()?;
            let g = ising::realize_ising(&p, &parse_rat(&mstar)?, &parse_rat(&eps)?)?;
            Ok(pretty(&g.json()))
        }
        Cmd::MincutDemo { beta, gamma, graph, s, t } => {
            let p = SpinParams::parse(&beta, &gamma)?;
            let inst = CutInstance::new(read_graph(&graph)?, s, t)?;
            let res = hardness::reduction_count_mincuts(&p, &inst)?;
            let mut out = res.json();
            if let Ok((k, c)) = hardness::mincut_bruteforce(&inst) {
                out["bruteforce"] = json!({"k": k, "C": c});
            }
            Ok(pretty(&out))
        }
        Cmd::Classify { point } => {
            let p = point.params()?;
            Ok(pretty(&zerofree::classify(&p).json(&p)))
        }
        Cmd::ZeroScan { gamma, beta_from, beta_to, steps, frac, out } => {
            let g = parse_rat(&gamma)?;
            let (b0, b1, f) = (parse_rat(&beta_from)?, parse_rat(&beta_to)?, parse_rat(&frac)?);
            if !(f > 0 && f < 1) {
                return Err(SpinError::InvalidInput("frac must lie in (0, 1)".into()));
            }
            let mut csv = String::from("# spin2 zero-scan v1\nbeta,gamma,radius,witness_n,root_lo,root_hi\n");
            let n = steps.max(1);
            for i in 0..=n {
                let b = &b0 + (&b1 - &b0) * Rat::from(i as u64) / Rat::from(n as u64);
                let p = SpinParams::new(b, g.clone());
                let radius = zerofree::disk_radius(&p)?;
                let rp = &radius + &f * (&p.beta - &radius);
                csv.push_str(&zerofree::zero_scan_row(&p, &rp)?);
                csv.push('\n');
            }
            match out {
                Some(path) => {
                    write_file(&path, &csv)?;
                    Ok(format!("wrote {}", path.display()))
                }
                None => Ok(csv.trim_end().to_string()),
            }
        }
        Cmd::StarRoot { point, r_prime, width } => {
            let p = point.params()?;
            let w = zerofree::star_root_witness(&p, &parse_rat(&r_prime)?, &parse_rat(&width)?)?;
            let mut v = serde_json::to_value(&w).unwrap_or_default();
            v["radius"] = zerofree::disk_radius(&p)?.json();
            Ok(pretty(&v))
        }
        Cmd::Fptas { point, eps, graph, emit_series } => {
            let p = point.params()?;
            let g = read_graph(&graph)?;
            let res = fptas::fptas_eval(&g, &p, &parse_rat(&eps)?)?;
            if let Some(path) = emit_series {
                write_file(&path, &fptas::series_csv(&res.series))?;
            }
            Ok(pretty(&res.json()))
        }
        Cmd::Fpras { point, eps, delta, seed, graph } => {
            let p = point.params()?;
            let g = read_graph(&graph)?;
            let res = holant::fpras_estimate(&g, &p, &parse_rat(&eps)?, &parse_rat(&delta)?, seed)?;
            let mut out = res.json();
            out["exact"] = match exact::partition_fn_ones(&g, &p) {
                Ok(z) => json!({"value": z.json(), "decimal": to_f64(&z)}),
                Err(_) => serde_json::Value::Null,
            };
            Ok(pretty(&out))
        }
        Cmd::HolantCheck { point, graph } => {
            let p = point.params()?;
            let g = read_graph(&graph)?;
            let inst = holant::subgraphs_world(&g, &p);
            let h = holant::holant_exact(&inst)?;
            let z_holant = &h * two_pow(g.n as i64);
            let z = exact::partition_fn_ones(&g, &p).ok();
            let hat = holant::fourier_hat(&holant::BinaryFn::interaction(&p));
            let table = if inst.sign_exponent > 0 { hat.neg() } else { hat };
            let entries = table.table();
            let nonneg = entries.iter().all(|x| *x >= 0);
            let windable = if nonneg { holant::windable_check(&entries, 2)?.is_some() } else { false };
            Ok(pretty(&json!({
                "holant": h.json(),
                "sign_exponent": inst.sign_exponent,
                "z_from_holant": z_holant.json(),
                "z_exact": z.as_ref().map(|z| z.json()),
                "equal": z.as_ref().map(|z| *z == z_holant),
                "table": table.json(),
                "table_nonnegative": nonneg,
                "windable": windable,
                "strictly_terraced": holant::strictly_terraced_check(&entries, 2),
            })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("SPIN2_ENUM_CAP") {
        match v.parse::<usize>() {
            Ok(cap) => exact::set_enum_cap(cap),
            Err(_) => {
                eprintln!("error: SPIN2_ENUM_CAP must be a nonnegative integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli.cmd) {
        Ok(s) => {
            let _ = writeln!(std::io::stdout(), "{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
