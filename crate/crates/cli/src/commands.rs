use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use wdmqn::config::NetworkConfig;
use wdmqn::phys::{network_rates, rates_csv};
use wdmqn::scoring::{parse_skr_list, Aeskr, ScoreFunction};
use wdmqn::stability::{
    ingest, parse_mask, parse_records, series_csv, summarize, table_selectors, SECONDS_PER_DAY,
};
use wdmqn::sweep::{
    aeskr_plateau, log_grid, mean_skr_region, run_sweep, select_operating_point, sweep_csv,
};
use wdmqn::topology::{solve_assignment, verify_full_mesh, ChannelAssignment};

use crate::exit;
use crate::{Command, Common, Format};

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Plan { common, seed } => plan(&common, seed),
        Command::Simulate {
            common,
            assignment,
            report_only,
        } => simulate(&common, &assignment, report_only),
        Command::Score {
            file,
            common,
            report_only,
        } => score(&file, &common, report_only),
        Command::Sweep {
            common,
            assignment,
            grid_min,
            grid_max,
            grid_points,
        } => sweep(&common, &assignment, grid_min, grid_max, grid_points),
        Command::Stability {
            trace,
            common,
            mask,
            bin_width,
        } => stability(&trace, &common, mask.as_deref(), bin_width),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(common: &Common) -> Result<NetworkConfig> {
    let Some(path) = &common.config else {
        bail!("no configuration: pass --config or set WDMQN_CONFIG");
    };
    NetworkConfig::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn load_assignment(cfg: &NetworkConfig, path: &Path) -> Result<ChannelAssignment> {
    let a = ChannelAssignment::from_json(&read(path)?)
        .with_context(|| format!("loading {}", path.display()))?;
    a.validate(&cfg.grid.grid())?;
    a.validate_users(&cfg.planned_users())?;
    let excluded = cfg.excluded();
    if let Some(g) = a.grants.iter().find(|g| excluded.contains(&g.lc)) {
        bail!(
            "assignment grants excluded channel LC{} to {}",
            g.lc,
            g.user
        );
    }
    Ok(a)
}

fn write_out(common: &Common, name: &str, contents: &str) -> Result<()> {
    if let Some(dir) = &common.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path: PathBuf = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serialises") + "\n"
}

fn plan(common: &Common, seed: Option<u64>) -> Result<u8> {
    let cfg = load_config(common)?;
    let users = cfg.planned_users();
    let mut opts = cfg.solve_options();
    if let Some(s) = seed {
        opts.seed = s;
    }
    let outcome = match solve_assignment(
        &users,
        &cfg.grid.grid(),
        &cfg.available_pairs(),
        &cfg.excluded(),
        opts,
    ) {
        Ok(o) => o,
        Err(wdmqn::Error::Infeasible(links)) => {
            eprintln!("uncovered pairs:");
            for l in &links {
                eprintln!("  {l}");
            }
            return Err(wdmqn::Error::Infeasible(links).into());
        }
        Err(e) => return Err(e.into()),
    };
    let report = verify_full_mesh(&outcome.assignment, &users);
    let assignment_json = outcome.assignment.to_json();
    let report_json = pretty(&json!({
        "seed": opts.seed,
        "objective": outcome.objective,
        "verification": report,
    }));
    write_out(common, "assignment.json", &assignment_json)?;
    write_out(common, "plan_report.json", &report_json)?;
    match common.format {
        Some(Format::Json) => print!("{assignment_json}"),
        Some(Format::Csv) => {
            println!("user,lc,port");
            for g in &outcome.assignment.grants {
                println!("{},{},{}", g.user, g.lc, g.port);
            }
        }
        None => {
            print!("{}", outcome.assignment.table(&users));
            println!(
                "{}/{} pairs covered; {} conjugate pairs used; at most {} channels per user",
                report.covered,
                report.required,
                report.pairs_used,
                report.max_channels_per_user()
            );
        }
    }
    if report.pass {
        Ok(0)
    } else {
        Err(wdmqn::Error::Infeasible(report.missing).into())
    }
}

fn failed_code(aeskr: Aeskr, report_only: bool) -> u8 {
    if aeskr.is_failed() && !report_only {
        exit::FAILED_NETWORK
    } else {
        0
    }
}

fn simulate(common: &Common, assignment: &Path, report_only: bool) -> Result<u8> {
    let cfg = load_config(common)?;
    let users = cfg.active_users();
    let a = load_assignment(&cfg, assignment)?.restricted_to(&users);
    let mesh = verify_full_mesh(&a, &users);
    if !mesh.pass {
        return Err(wdmqn::Error::Infeasible(mesh.missing).into());
    }
    let rates = network_rates(&users, &a, &cfg.model()?)?;
    let entries: Vec<_> = rates.iter().map(|(l, r)| (l.clone(), r.skr)).collect();
    let breakdown = cfg.scoring.breakdown(&users, &entries)?;
    let csv = rates_csv(&rates);
    let report_json = pretty(&serde_json::to_value(&breakdown)?);
    write_out(common, "rates.csv", &csv)?;
    write_out(common, "score.json", &report_json)?;
    match common.format {
        Some(Format::Csv) => print!("{csv}"),
        Some(Format::Json) => print!("{report_json}"),
        None => {
            println!(
                "{:<16} {:>12} {:>9} {:>12}",
                "link", "coinc/s", "qber", "skr_bps"
            );
            for (l, r) in &rates {
                println!(
                    "{:<16} {:>12.3} {:>9.5} {:>12.5}",
                    l.to_string(),
                    r.true_coincidences + r.accidentals,
                    r.qber,
                    r.skr
                );
            }
            println!(
                "{} links; W = {:.6}; AE-SKR = {}",
                rates.len(),
                breakdown.full.w,
                breakdown.full.aeskr
            );
        }
    }
    Ok(failed_code(breakdown.full.aeskr, report_only))
}

fn score(file: &Path, common: &Common, report_only: bool) -> Result<u8> {
    let scoring = match &common.config {
        Some(_) => load_config(common)?.scoring,
        None => ScoreFunction::default(),
    };
    let entries =
        parse_skr_list(&read(file)?).with_context(|| format!("parsing {}", file.display()))?;
    let report = scoring.report("Full Network", &entries)?;
    let report_json = pretty(&serde_json::to_value(&report)?);
    write_out(common, "score.json", &report_json)?;
    match common.format {
        Some(Format::Csv) => print!("{}", report.links_csv()),
        Some(Format::Json) => print!("{report_json}"),
        None => println!(
            "{} links; W = {:.6}; AE-SKR = {}",
            report.links.len(),
            report.w,
            report.aeskr
        ),
    }
    Ok(failed_code(report.aeskr, report_only))
}

fn sweep(
    common: &Common,
    assignment: &Path,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: Option<u32>,
) -> Result<u8> {
    let cfg = load_config(common)?;
    let users = cfg.active_users();
    let a = load_assignment(&cfg, assignment)?.restricted_to(&users);
    let sw = cfg.sweep;
    let grid = log_grid(
        grid_min.unwrap_or(sw.grid_min),
        grid_max.unwrap_or(sw.grid_max),
        grid_points.unwrap_or(sw.points_per_decade),
    )?;
    let points = run_sweep(
        &users,
        &a,
        &cfg.model()?,
        &cfg.scoring,
        cfg.source.reference_transmission,
        &grid,
    )?;
    let csv = sweep_csv(&points);
    write_out(common, "sweep.csv", &csv)?;
    let best = select_operating_point(&points);
    let plateau = aeskr_plateau(&points, sw.plateau_tolerance);
    let region = mean_skr_region(&points, sw.plateau_tolerance);
    let range = |r: Option<(usize, usize)>| {
        r.map(|(lo, hi)| json!([points[lo].reference_singles, points[hi].reference_singles]))
    };
    let summary = pretty(&json!({
        "operating_point": best.as_ref().ok(),
        "aeskr_plateau": range(plateau),
        "mean_skr_region": range(region),
        "tolerance": sw.plateau_tolerance,
    }));
    write_out(common, "sweep_summary.json", &summary)?;
    match common.format {
        Some(Format::Csv) => print!("{csv}"),
        Some(Format::Json) => print!("{summary}"),
        None => {
            println!(
                "{} points, {:.4e}..{:.4e} singles/s",
                points.len(),
                grid[0],
                grid[grid.len() - 1]
            );
            if let Ok(p) = &best {
                println!(
                    "operating point: {:.4e} singles/s, AE-SKR {}, mean SKR {:.4}, min SKR {:.4}",
                    p.reference_singles, p.aeskr, p.mean_skr, p.min_skr
                );
            }
            if let Some((lo, hi)) = plateau {
                println!(
                    "AE-SKR within {}% of max: {:.4e}..{:.4e}",
                    sw.plateau_tolerance * 100.0,
                    points[lo].reference_singles,
                    points[hi].reference_singles
                );
            }
        }
    }
    best?;
    Ok(0)
}

fn stability(
    trace: &Path,
    common: &Common,
    mask: Option<&Path>,
    bin_width: Option<f64>,
) -> Result<u8> {
    let cfg = load_config(common)?;
    let users = cfg.planned_users();
    let records = parse_records(&read(trace)?);
    if records.rejected > 0 {
        eprintln!("warning: {} record(s) rejected", records.rejected);
    }
    let masks = match mask {
        Some(p) => parse_mask(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => Vec::new(),
    };
    let width = bin_width.unwrap_or(cfg.stability.bin_width);
    let tr = ingest(&records.samples, width, cfg.stability.origin, &masks)?;
    let selectors = table_selectors(&users, &tr)?;
    let summary = summarize(
        &tr,
        &users,
        &selectors,
        &cfg.scoring,
        cfg.stability.full_period,
    )?;
    let summary_json = pretty(&json!({
        "records": records.samples.len(),
        "rejected": records.rejected + tr.rejected,
        "summary": summary,
        "failure_elapsed_days": summary.failure_elapsed_days(),
    }));
    let series = series_csv(&tr, &users, &selectors, &cfg.scoring)?;
    write_out(common, "stability_summary.json", &summary_json)?;
    write_out(common, "stability_series.csv", &series)?;
    match common.format {
        Some(Format::Csv) => print!("{series}"),
        Some(Format::Json) => print!("{summary_json}"),
        None => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:<14} {:>12} {:>12} {:>12}",
                "", "AE-SKR", "max", "min"
            );
            for r in &summary.rows {
                let _ = writeln!(
                    out,
                    "{:<14} {:>12} {:>12} {:>12}",
                    r.label,
                    fmt_aeskr(r.full),
                    fmt_aeskr(r.max),
                    fmt_aeskr(r.min)
                );
            }
            let span = summary.bins as f64 * summary.bin_width / SECONDS_PER_DAY;
            let _ = writeln!(
                out,
                "{} bins over {span:.2} days, {} masked",
                summary.bins, summary.masked_bins
            );
            match summary.failure_elapsed_days() {
                Some(d) => {
                    let _ = writeln!(out, "network failed after {d:.3} days");
                }
                None => {
                    let _ = writeln!(out, "no network failure");
                }
            }
            print!("{out}");
        }
    }
    Ok(0)
}

fn fmt_aeskr(a: Aeskr) -> String {
    match a {
        Aeskr::Rate(r) => format!("{r:.4}"),
        Aeskr::Failed => "FAILED".into(),
    }
}
