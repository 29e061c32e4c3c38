use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cellgan::backend::Backend;
use cellgan::config::{BackendKind, ExperimentConfig};
use cellgan::error::{Error, Result};
use cellgan::experiments::{
    disc_collapse_heatmap, heatmap_table, mode_collapse_heatmap, render_pgm, run_ablation, AblationReport,
    HeatmapResult,
};
use cellgan::metrics::{audit_report, AuditReport};
use cellgan::report::{read_stamped, OutputDir, Provenance, Stamped};
use cellgan::runtime::{run_grid, GridResult};

pub fn load(path: &Path, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    if !path.is_file() {
        return Err(Error::config("config", format!("cannot read {}", path.display())));
    }
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = out {
        cfg.experiment.output_dir = dir;
    }
    Ok(cfg)
}

fn output(command: &str, cfg: &ExperimentConfig) -> OutputDir {
    OutputDir::new(&cfg.experiment.output_dir, Provenance::new(command, cfg))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    method: String,
    best_cell: String,
    best_score: f64,
    max_staleness: u64,
    audit: &'a AuditReport,
}

fn audit_of<G, D>(cfg: &ExperimentConfig, result: &GridResult<G, D>) -> Result<AuditReport> {
    let spec = cfg.run_spec()?;
    Ok(audit_report(
        &result.counters,
        result.method,
        &spec.grid,
        spec.train.epochs as u64,
        spec.train.batches_per_epoch as u64,
    ))
}

fn write_run<B: Backend>(backend: &B, cfg: &ExperimentConfig) -> Result<()> {
    let result = run_grid(backend, &cfg.run_spec()?)?;
    let out = output("run", cfg);

    let mut progress = String::from("row,col,epoch,best_g_fitness,best_d_fitness,mixture_score\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for p in &result.progress {
        let _ = writeln!(
            progress,
            "{},{},{},{},{},{}",
            p.cell.row,
            p.cell.col,
            p.epoch,
            opt(p.best_g_fitness),
            opt(p.best_d_fitness),
            opt(p.mixture_score)
        );
    }
    out.text("progress.csv", &progress)?;

    let mut cells = String::from(
        "row,col,ensemble_score,generator_lr,discriminator_lr,pairwise_evaluations,gradient_updates,migrations,selections\n",
    );
    for c in &result.cells {
        let k = c.counters.as_array();
        let _ = writeln!(
            cells,
            "{},{},{},{},{},{},{},{},{}",
            c.cell.row,
            c.cell.col,
            c.ensemble.score,
            c.center_generator.learning_rate,
            c.center_discriminator.learning_rate,
            k[0],
            k[1],
            k[2],
            k[3]
        );
    }
    out.text("cells.csv", &cells)?;

    let best = result.best();
    out.json("ensemble.json", &best.ensemble)?;
    out.json("result.json", &result)?;
    let audit = audit_of(cfg, &result)?;
    out.json(
        "summary.json",
        &RunSummary {
            method: result.method.to_string(),
            best_cell: best.cell.to_string(),
            best_score: best.ensemble.score,
            max_staleness: result.max_staleness,
            audit: &audit,
        },
    )?;
    println!(
        "{}: best cell {} score {:.6}, audit {}",
        result.method,
        best.cell,
        best.ensemble.score,
        if audit.passed() { "ok" } else { "MISMATCH" }
    );
    println!("outputs in {}", out.root().display());
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.experiment.backend {
        BackendKind::Toy => write_run(&cfg.toy_backend(), cfg),
        BackendKind::Neural => write_run(&cfg.neural.build()?, cfg),
    }
}

fn heatmap_summary(h: &HeatmapResult) -> String {
    let mut s = format!("mean {:.4}\ndiagonal {:.4}\n", h.mean(), h.diagonal_mean());
    for (name, x, y) in [("nn", false, false), ("np", false, true), ("pn", true, false), ("pp", true, true)] {
        if let Some(q) = h.quadrant_mean(x, y) {
            let _ = writeln!(s, "quadrant {name} {q:.4}");
        }
    }
    s
}

fn write_heatmap(command: &str, stem: &str, cfg: &ExperimentConfig, h: &HeatmapResult) -> Result<()> {
    let out = output(command, cfg);
    out.json(&format!("{stem}.json"), h)?;
    out.text(&format!("{stem}.csv"), &h.to_csv())?;
    let summary = heatmap_summary(h);
    out.text(&format!("{stem}.txt"), &format!("{summary}\n{}", heatmap_table(&h.axis, &h.success)?))?;
    print!("{summary}");
    println!("outputs in {}", out.root().display());
    Ok(())
}

pub fn heatmap_mode(cfg: &ExperimentConfig) -> Result<()> {
    let h = mode_collapse_heatmap(&cfg.heatmap_mode, cfg.experiment.seed)?;
    write_heatmap("heatmap-mode", "heatmap_mode", cfg, &h)
}

pub fn heatmap_disc(cfg: &ExperimentConfig) -> Result<()> {
    let h = disc_collapse_heatmap(&cfg.heatmap_disc, cfg.experiment.seed)?;
    write_heatmap("heatmap-disc", "heatmap_disc", cfg, &h)
}

pub fn ablate(cfg: &ExperimentConfig) -> Result<()> {
    let report = run_ablation(&cfg.ablation_spec())?;
    let out = output("ablate", cfg);
    out.json("ablation.json", &report)?;
    out.text("ablation_runs.csv", &report.runs_csv())?;
    let audits: String = report.runs.iter().map(|r| r.audit.to_string()).collect();
    out.text("ablation_table.txt", &format!("{}{audits}", report.table()))?;
    print!("{}", report.table());
    println!("audits {}", if report.audits_passed() { "ok" } else { "MISMATCH" });
    println!("outputs in {}", out.root().display());
    Ok(())
}

pub fn render(input: &Path, out: Option<&Path>, cell_px: Option<usize>) -> Result<()> {
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::config("input", format!("bad file name {}", input.display())))?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| input.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::config("input", format!("{}: {e}", input.display())))?;

    if let Ok(h) = serde_json::from_str::<Stamped<HeatmapResult>>(&text) {
        let n = h.data.axis.len();
        if h.data.success.len() != n || h.data.success.iter().any(|r| r.len() != n) {
            return Err(Error::config("input", "heatmap matrix does not match its axis"));
        }
        let px = cell_px.unwrap_or(h.provenance.config.render.cell_px);
        let image = render_pgm(&h.data.image_rows(), px).map_err(|e| Error::config("input", e.to_string()))?;
        let out = OutputDir::new(dir, h.provenance);
        out.pgm(&format!("{stem}.pgm"), &image)?;
        out.text(&format!("{stem}_table.txt"), &heatmap_table(&h.data.axis, &h.data.success)?)?;
        println!("rendered {}", out.root().join(format!("{stem}.pgm")).display());
        return Ok(());
    }
    if let Ok(r) = serde_json::from_str::<Stamped<AblationReport>>(&text) {
        let out = OutputDir::new(dir, r.provenance);
        out.text(&format!("{stem}_table.txt"), &r.data.table())?;
        println!("rendered {}", out.root().join(format!("{stem}_table.txt")).display());
        return Ok(());
    }
    // Re-read through the generic path for a precise diagnostic.
    read_stamped::<serde_json::Value>(input)?;
    Err(Error::config(
        "input",
        format!("{} is neither a heatmap nor an ablation result", input.display()),
    ))
}

fn audit_with<B: Backend>(backend: &B, cfg: &ExperimentConfig) -> Result<Vec<AuditReport>> {
    cfg.ablation
        .methods
        .iter()
        .map(|&method| {
            let mut c = cfg.clone();
            c.experiment.method = method;
            let result = run_grid(backend, &c.run_spec()?)?;
            audit_of(&c, &result)
        })
        .collect()
}

pub fn audit(cfg: &ExperimentConfig) -> Result<()> {
    let reports = match cfg.experiment.backend {
        BackendKind::Toy => audit_with(&cfg.toy_backend(), cfg)?,
        BackendKind::Neural => audit_with(&cfg.neural.build()?, cfg)?,
    };
    let out = output("audit", cfg);
    let text: String = reports.iter().map(|r| r.to_string()).collect();
    out.text("audit.txt", &text)?;
    out.json("audit.json", &reports)?;
    print!("{text}");
    if reports.iter().all(AuditReport::passed) {
        println!("audit ok");
        Ok(())
    } else {
        Err(Error::Audit(format!("counter mismatch, see {}", out.root().join("audit.txt").display())))
    }
}
