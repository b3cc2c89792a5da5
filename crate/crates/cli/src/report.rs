//! Convergence report: merges per-run trajectory.csv files into one CSV and a
//! minimal hand-rolled SVG (one polyline per run, axes, legend).

use std::path::PathBuf;

use clap::Args;

use modsearch_core::artifacts::{parse_trajectory_csv, TRAJECTORY_FILE};
use modsearch_core::search::IterationRow;

use crate::{CliError, CliResult};

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories containing trajectory.csv (repeatable).
    #[arg(long = "in", required = false)]
    pub inputs: Vec<PathBuf>,
    /// Output SVG path; the merged CSV lands next to it with a .csv extension.
    #[arg(long)]
    pub out: PathBuf,
    /// Plot best-so-far against cumulative tokens instead of real evaluations.
    #[arg(long, default_value_t = false)]
    pub cost: bool,
}

struct RunSeries {
    label: String,
    rows: Vec<IterationRow>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn svg_plot(series: &[RunSeries], cost_axis: bool) -> String {
    let x_of = |r: &IterationRow| {
        if cost_axis {
            r.tokens_cum as f64
        } else {
            r.real_evals_cum as f64
        }
    };
    let x_max = series
        .iter()
        .flat_map(|s| s.rows.iter())
        .map(&x_of)
        .fold(1.0f64, f64::max);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x / x_max * plot_w;
    // Scores live in [0,1]; y grows downward in SVG.
    let py = |y: f64| MARGIN + (1.0 - y) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    svg.push_str(&format!(
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n  \
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    let x_label = if cost_axis { "cumulative tokens" } else { "real evaluations" };
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" \
         text-anchor=\"middle\">best score</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = s
            .rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(x_of(r)), py(r.best_so_far)))
            .collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        let ly = MARGIN + 14.0 * i as f64;
        svg.push_str(&format!(
            "  <rect x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n  \
             <text x=\"{tx}\" y=\"{ty}\" font-size=\"11\">{label}</text>\n",
            x = WIDTH - MARGIN - 150.0,
            y = ly,
            tx = WIDTH - MARGIN - 136.0,
            ty = ly + 9.0,
            label = s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn merged_csv(series: &[RunSeries]) -> String {
    let mut out = String::from("run,iteration,phase,best_so_far,real_evals_cum,tokens_cum\n");
    for s in series {
        for r in &s.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.label, r.iteration, r.phase, r.best_so_far, r.real_evals_cum, r.tokens_cum
            ));
        }
    }
    out
}

pub fn cmd_report(args: ReportArgs) -> CliResult<()> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage("report needs at least one --in directory".to_string()));
    }
    let mut series = Vec::new();
    for dir in &args.inputs {
        let path = dir.join(TRAJECTORY_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        let rows = parse_trajectory_csv(&text)?;
        let label = dir
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("run")
            .to_string();
        series.push(RunSeries { label, rows });
    }

    std::fs::write(&args.out, svg_plot(&series, args.cost))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, merged_csv(&series))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    println!(
        "report: {} runs -> {} and {}",
        series.len(),
        args.out.display(),
        csv_path.display()
    );
    Ok(())
}
