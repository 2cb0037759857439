use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sitewave::coverage::{
    eval_grid, eval_route, grid_csv, grid_ppm, histogram, histogram_csv, route_csv, CoverageError, RouteResult,
    Stats,
};
use sitewave::scene::{save_scene, BuildOptions, Scene};

use crate::config::{load_config, resolve, scene_from_osm, Scenario};
use crate::error::{CliError, Failure, Kind};

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes all artifacts, or none if the destination cannot be prepared.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes)?;
    }
    Ok(())
}

fn coverage_error(e: CoverageError) -> CliError {
    match e {
        CoverageError::BelowTerrain { .. } | CoverageError::EmptyRoute => CliError::config("route", e),
        CoverageError::Grid => CliError::config("grid", e),
        CoverageError::Trace(_) => CliError::config("trace", e),
        CoverageError::Radio(_) => CliError::config("radio", e),
        other => CliError::new(Kind::Input, other.to_string()),
    }
}

/// Table of mean and standard deviation per scenario.
pub fn summary_table(rows: &[(String, Stats)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("scenario".len());
    let mut out = format!("{:<width$}  {:>10}  {:>7}\n", "scenario", "mean (dBm)", "SD (dB)");
    for (name, s) in rows {
        writeln!(out, "{name:<width$}  {:>10.2}  {:>7.2}", s.mean, s.sd).unwrap();
    }
    out
}

fn summary_csv(rows: &[(String, Stats)]) -> String {
    let mut out = String::from("scenario,mean_dbm,sd_db\n");
    for (name, s) in rows {
        writeln!(out, "{},{},{}", csv_field(name), s.mean, s.sd).unwrap();
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct SceneBuildArgs<'a> {
    pub osm: &'a Path,
    pub terrain: Option<&'a Path>,
    pub options: BuildOptions,
    pub out: &'a Path,
}

pub fn scene_summary(scene: &Scene) -> String {
    let mut out = format!(
        "buildings: {}\ntriangles: {}\nedges: {}\nfoliage volumes: {}\nwarnings: {}\n",
        scene.buildings().len(),
        scene.triangle_count(),
        scene.edges().len(),
        scene.foliage().len(),
        scene.warnings().len(),
    );
    for w in scene.warnings() {
        writeln!(out, "  {w}").unwrap();
    }
    out
}

pub fn scene_build(args: &SceneBuildArgs) -> Result<String, Failure> {
    let scene = scene_from_osm(args.osm, args.terrain, &args.options)?;
    for w in scene.warnings() {
        log::warn!("{w}");
    }
    write_atomic(args.out, save_scene(&scene).as_bytes())?;
    Ok(scene_summary(&scene))
}

fn load(config: &Path) -> Result<Scenario, Failure> {
    let cfg = load_config(config)?;
    Ok(resolve(&cfg)?)
}

fn route_stats(route: &RouteResult) -> Result<Stats, CliError> {
    sitewave::coverage::stats(&route.rss()).map_err(coverage_error)
}

/// Runs one scenario, writes its artifacts and returns the printed summary.
pub fn run(config: &Path, out_dir: &Path) -> Result<String, Failure> {
    let sc = load(config)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut hist_values = None;
    if let Some(route) = &sc.route {
        let result = eval_route(&sc.scene, &sc.link, &sc.trace, route).map_err(coverage_error)?;
        rows.push((format!("{} (route)", sc.name), route_stats(&result)?));
        files.push((sc.outputs.route_csv.clone(), route_csv(&result).into_bytes()));
        hist_values = Some(result.rss());
    }
    if let Some(spec) = &sc.grid {
        let grid = eval_grid(&sc.scene, &sc.link, &sc.trace, spec).map_err(coverage_error)?;
        let outdoor = grid.outdoor();
        if !outdoor.is_empty() {
            rows.push((format!("{} (grid)", sc.name), sitewave::coverage::stats(&outdoor).map_err(coverage_error)?));
        }
        files.push((sc.outputs.grid_csv.clone(), grid_csv(&grid).into_bytes()));
        files.push((sc.outputs.grid_ppm.clone(), grid_ppm(&grid)));
        hist_values = Some(grid.rss_dbm.clone());
    }
    let values = hist_values.expect("validated route or grid");
    let hist = histogram(&values, &sc.thresholds);
    files.push((sc.outputs.histogram_csv.clone(), histogram_csv(&hist, &sc.thresholds).into_bytes()));
    files.push((sc.outputs.summary_csv.clone(), summary_csv(&rows).into_bytes()));
    write_all(out_dir, &files)?;
    Ok(summary_table(&rows))
}

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_STATS_CSV: &str = "comparison_stats.csv";

/// Evaluates the shared route of several scenarios side by side.
pub fn compare(configs: &[PathBuf], out_dir: &Path) -> Result<String, Failure> {
    if configs.len() < 2 {
        return Err(CliError::new(Kind::Input, "compare needs at least two configs").into());
    }
    // Every config is validated and resolved before any evaluation.
    let scenarios = configs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let mut routes = Vec::new();
    for (sc, path) in scenarios.iter().zip(configs) {
        let route = sc
            .route
            .as_ref()
            .ok_or_else(|| CliError::config("route", "compare requires a route").at(path.display().to_string()))?;
        if let Some(first) = routes.first().map(|r: &&sitewave::coverage::RouteSpec| r.receivers.len()) {
            if route.receivers.len() != first {
                let msg = format!("route has {} receivers, expected {first}", route.receivers.len());
                return Err(CliError::input(path, msg).into());
            }
        }
        routes.push(route);
    }
    let results = scenarios
        .iter()
        .zip(&routes)
        .map(|(sc, route)| eval_route(&sc.scene, &sc.link, &sc.trace, route).map_err(coverage_error))
        .collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = scenarios.into_iter().map(|sc| sc.name).collect();

    let mut table = String::from("index,x,y,z");
    for n in &names {
        table.push(',');
        table.push_str(&csv_field(n));
    }
    table.push('\n');
    for (i, s) in results[0].samples.iter().enumerate() {
        let p = s.position;
        write!(table, "{i},{},{},{}", p.x, p.y, p.z).unwrap();
        for r in &results {
            write!(table, ",{}", r.samples[i].rss_dbm).unwrap();
        }
        table.push('\n');
    }

    let mut rows = names
        .into_iter()
        .zip(&results)
        .map(|(n, r)| route_stats(r).map(|s| (n, s)))
        .collect::<Result<Vec<_>, _>>()?;
    // Descending mean; ties keep the command-line order.
    rows.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean));
    write_all(
        out_dir,
        &[
            (COMPARISON_CSV.to_string(), table.into_bytes()),
            (COMPARISON_STATS_CSV.to_string(), summary_csv(&rows).into_bytes()),
        ],
    )?;
    Ok(summary_table(&rows))
}
