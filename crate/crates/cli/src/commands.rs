use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::Duration;
use rayon::prelude::*;
use serde::Serialize;

use dirank::analysis::{self, BlockOutcome, WindowSpec, DEFAULT_WINDOW_STEP};
use dirank::estimator::OrderSelection;
use dirank::graph::{aggregate_regions, build_graph, net_flow, pagerank_rank, select_alignment_order};
use dirank::ingest::PairAlignment;
use dirank::synth::{self, SynthSpec};
use dirank::{CausalGraph, RankingResult, RawSeries, Region};

use crate::config::{OutputFormat, RunConfig, MANIFEST_NAME};
use crate::{Command, Common};

#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    format: OutputFormat,
    report: Report,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = RunConfig::load(&common.config)?;
        if let Some(seed) = common.seed {
            cfg.estimator.jitter_seed = seed;
        }
        if let Some(k) = common.k {
            cfg.estimator.k = k;
        }
        if let Some(t) = common.transform {
            cfg.estimator.transform = t;
        }
        if common.clamp_negative {
            cfg.estimator.clamp_negative = true;
        }
        cfg.validate()?;
        let out = match (&common.out, &cfg.output.dir) {
            (Some(o), _) => o.clone(),
            (None, Some(d)) => cfg.base_dir.join(d),
            (None, None) => cfg.base_dir.join("out"),
        };
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let format = common.format.unwrap_or(cfg.output.format);
        Ok(Self { cfg, out, format, report: Report::default() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        write_file(&path, contents)?;
        self.report.written.push(path);
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json` depending on the output format.
    fn write_table<T: Serialize>(&mut self, stem: &str, rows: &[T], json: &impl Serialize) -> Result<()> {
        let text = match self.format {
            OutputFormat::Csv => to_csv(rows)?,
            OutputFormat::Json => serde_json::to_string_pretty(json)? + "\n",
        };
        self.write(&format!("{stem}.{}", self.format.ext()), &text)
    }

    fn graph(&self) -> Result<(Vec<RawSeries>, CausalGraph)> {
        let series = self.cfg.load_all()?;
        let g = build_graph(&series, &self.cfg.estimator)?;
        Ok((series, g))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

#[derive(Serialize)]
struct RankRow<'a> {
    id: &'a str,
    score: f64,
    rank: usize,
}

fn rank_rows(r: &RankingResult) -> Vec<RankRow<'_>> {
    let ranks = r.ranks();
    let mut rows: Vec<RankRow> =
        r.labels.iter().zip(&r.scores).zip(ranks).map(|((id, &score), rank)| RankRow { id, score, rank }).collect();
    rows.sort_by_key(|row| row.rank);
    rows
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    src: &'a str,
    dst: &'a str,
    di: f64,
    raw: f64,
    markov_order: usize,
    n_effective: usize,
    delta: usize,
}

fn edge_rows(g: &CausalGraph) -> Vec<EdgeRow<'_>> {
    let Some(meta) = &g.meta else { return Vec::new() };
    let mut rows = Vec::new();
    for (i, src) in g.labels.iter().enumerate() {
        for (j, dst) in g.labels.iter().enumerate() {
            if let Some(m) = &meta[i][j] {
                rows.push(EdgeRow {
                    src,
                    dst,
                    di: g.weights[i][j],
                    raw: m.raw,
                    markov_order: m.markov_order,
                    n_effective: m.n_effective,
                    delta: m.delta,
                });
            }
        }
    }
    rows
}

pub fn run(command: Command) -> Result<Report> {
    match command {
        Command::Rank { common, pagerank, damping } => rank(&common, pagerank, damping),
        Command::Heatmap { common } => heatmap(&common),
        Command::Regions { common } => regions(&common),
        Command::Window { common, src, dst, length, step } => window(&common, src, dst, length, step),
        Command::Blocks { common, min_samples } => blocks(&common, min_samples),
        Command::Orders { common } => orders(&common),
        Command::Synth { network, n, seed, a, sigma_w, start, step_minutes, out } => {
            synth_cmd(SynthSpec::new(n, seed, network.network(a, sigma_w)), start, step_minutes, &out)
        }
    }
}

fn rank(common: &Common, pagerank: bool, damping: f64) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let (_, g) = ctx.graph()?;
    let ranking = net_flow(&g);
    ctx.write("graph.json", &(g.to_json()? + "\n"))?;
    ctx.write("graph.csv", &g.to_csv_matrix())?;
    ctx.write_table("ranking", &rank_rows(&ranking), &ranking)?;
    let edges = edge_rows(&g);
    ctx.write_table("edges", &edges, &edges)?;
    if pagerank {
        let pr = pagerank_rank(&g, damping)?;
        ctx.write_table("pagerank", &rank_rows(&pr), &pr)?;
    }
    Ok(ctx.report)
}

fn heatmap(common: &Common) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let (_, g) = ctx.graph()?;
    match ctx.format {
        OutputFormat::Csv => ctx.write("heatmap.csv", &g.to_csv_matrix())?,
        OutputFormat::Json => ctx.write("heatmap.json", &(g.to_json()? + "\n"))?,
    }
    Ok(ctx.report)
}

fn regions(common: &Common) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let (series, g) = ctx.graph()?;
    let map: HashMap<String, Region> = series.iter().map(|s| (s.id.clone(), s.region)).collect();
    let agg = aggregate_regions(&g, &map)?;
    let ranking = net_flow(&agg);
    match ctx.format {
        OutputFormat::Csv => ctx.write("regions.csv", &agg.to_csv_matrix())?,
        OutputFormat::Json => ctx.write("regions.json", &(agg.to_json()? + "\n"))?,
    }
    ctx.write_table("region_ranking", &rank_rows(&ranking), &ranking)?;
    Ok(ctx.report)
}

#[derive(Serialize)]
struct WindowOut {
    start: String,
    end: String,
    di: f64,
    raw: f64,
    markov_order: usize,
    n_effective: usize,
}

fn window(common: &Common, src: Option<String>, dst: Option<String>, length: Option<usize>, step: Option<usize>) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let wc = ctx.cfg.window.clone();
    let src = src.or(wc.src).ok_or_else(|| anyhow!("window needs a source id (--src or [window] src)"))?;
    let dst = dst.or(wc.dst).ok_or_else(|| anyhow!("window needs a destination id (--dst or [window] dst)"))?;
    let length = length.or(wc.length).ok_or_else(|| anyhow!("window needs a length (--length or [window] length)"))?;
    let step = step.or(wc.step).unwrap_or(DEFAULT_WINDOW_STEP);
    let series = ctx.cfg.load_all()?;
    let find = |id: &str| series.iter().find(|s| s.id == id).ok_or_else(|| anyhow!("series `{id}` is not in the manifest"));
    let pair = PairAlignment::new(find(&src)?, find(&dst)?)?;
    let rows = analysis::sliding_windows(&pair, &WindowSpec { length, step }, &ctx.cfg.estimator)?;
    let out: Vec<WindowOut> = rows
        .iter()
        .map(|r| WindowOut {
            start: r.start.to_string(),
            end: r.end.to_string(),
            di: r.estimate.value,
            raw: r.estimate.raw,
            markov_order: r.estimate.markov_order,
            n_effective: r.estimate.n_effective,
        })
        .collect();
    ctx.write_table("window", &out, &out)?;
    Ok(ctx.report)
}

#[derive(Serialize)]
struct BlockRow<'a> {
    month: String,
    id: &'a str,
    net_flow: Option<f64>,
    rank: Option<usize>,
    status: &'static str,
}

fn blocks(common: &Common, min_samples: Option<usize>) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let series = ctx.cfg.load_all()?;
    let min = min_samples
        .or(ctx.cfg.blocks.min_samples)
        .unwrap_or_else(|| analysis::default_min_block_samples(&ctx.cfg.estimator));
    let results = analysis::monthly_blocks(&series, &ctx.cfg.estimator, min);
    let mut rows = Vec::new();
    for b in &results {
        let month = b.month.to_string();
        match &b.outcome {
            BlockOutcome::Ok { ranking, .. } => {
                for (row, score) in ranking.labels.iter().zip(ranking.ranks()).zip(&ranking.scores) {
                    let (id, rank) = row;
                    rows.push(BlockRow { month: month.clone(), id, net_flow: Some(*score), rank: Some(rank), status: "ok" });
                }
            }
            other => {
                let (status, why) = match other {
                    BlockOutcome::BlockTooShort { src, dst, samples, minimum } => {
                        ("block_too_short", format!("{src} -> {dst} has {samples} samples, minimum {minimum}"))
                    }
                    BlockOutcome::Failed { message } => ("failed", message.clone()),
                    BlockOutcome::Ok { .. } => unreachable!(),
                };
                ctx.report.warnings.push(format!("block {month}: {why}"));
                for s in &series {
                    rows.push(BlockRow { month: month.clone(), id: &s.id, net_flow: None, rank: None, status });
                }
            }
        }
    }
    ctx.write_table("blocks", &rows, &results)?;
    Ok(ctx.report)
}

#[derive(Serialize)]
struct OrderRow<'a> {
    src: &'a str,
    dst: &'a str,
    selected: usize,
    candidate: usize,
    loss: Option<f64>,
    std_error: Option<f64>,
}

#[derive(Serialize)]
struct OrdersJson<'a> {
    pairs: Vec<PairOrders<'a>>,
    frequency: BTreeMap<usize, usize>,
}

#[derive(Serialize)]
struct PairOrders<'a> {
    src: &'a str,
    dst: &'a str,
    #[serde(flatten)]
    selection: &'a OrderSelection,
}

#[derive(Serialize)]
struct FrequencyRow {
    order: usize,
    count: usize,
}

fn orders(common: &Common) -> Result<Report> {
    let mut ctx = Ctx::new(common)?;
    let series = ctx.cfg.load_all()?;
    let cfg = &ctx.cfg.estimator;
    let pairs: Vec<(usize, usize)> =
        (0..series.len()).flat_map(|i| (0..series.len()).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let outcomes: Vec<Result<OrderSelection>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pair = PairAlignment::new(&series[i], &series[j])?;
            Ok(select_alignment_order(&pair, cfg)?)
        })
        .collect();
    let mut failures = Vec::new();
    let mut selections = Vec::new();
    for (&(i, j), o) in pairs.iter().zip(outcomes) {
        match o {
            Ok(sel) => selections.push((i, j, sel)),
            Err(e) => failures.push(format!("{} -> {}: {e:#}", series[i].id, series[j].id)),
        }
    }
    if !failures.is_empty() {
        bail!("{} pairs failed:\n  {}", failures.len(), failures.join("\n  "));
    }
    let mut frequency = BTreeMap::new();
    for (_, _, sel) in &selections {
        *frequency.entry(sel.order).or_insert(0) += 1;
    }
    match ctx.format {
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for (i, j, sel) in &selections {
                let (src, dst) = (series[*i].id.as_str(), series[*j].id.as_str());
                if sel.losses.is_empty() {
                    rows.push(OrderRow { src, dst, selected: sel.order, candidate: sel.order, loss: None, std_error: None });
                }
                for l in &sel.losses {
                    rows.push(OrderRow {
                        src,
                        dst,
                        selected: sel.order,
                        candidate: l.order,
                        loss: Some(l.loss),
                        std_error: Some(l.std_error),
                    });
                }
            }
            let freq: Vec<FrequencyRow> = frequency.iter().map(|(&order, &count)| FrequencyRow { order, count }).collect();
            ctx.write("orders.csv", &to_csv(&rows)?)?;
            ctx.write("order_frequency.csv", &to_csv(&freq)?)?;
        }
        OutputFormat::Json => {
            let pairs = selections
                .iter()
                .map(|(i, j, sel)| PairOrders { src: &series[*i].id, dst: &series[*j].id, selection: sel })
                .collect();
            let text = serde_json::to_string_pretty(&OrdersJson { pairs, frequency })? + "\n";
            ctx.write("orders.json", &text)?;
        }
    }
    Ok(ctx.report)
}

#[derive(Serialize)]
struct PriceRow {
    date: String,
    close: f64,
}

fn synth_cmd(spec: SynthSpec, start: chrono::NaiveDate, step_minutes: i64, out: &Path) -> Result<Report> {
    if step_minutes <= 0 {
        bail!("--step-minutes must be positive");
    }
    let generated = synth::generate(&spec)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let step = Duration::minutes(step_minutes);
    let daily = step_minutes % 1440 == 0;
    let mut report = Report::default();
    let mut manifest = String::new();
    for (id, values) in &generated {
        let s = synth::as_price_series(id, values, Region::Other, start, step);
        let rows: Vec<PriceRow> = s
            .timestamps
            .iter()
            .zip(&s.values)
            .map(|(t, &close)| PriceRow {
                date: if daily { t.date().to_string() } else { t.format("%Y-%m-%dT%H:%M:%S").to_string() },
                close,
            })
            .collect();
        let name = format!("{id}.csv");
        let path = out.join(&name);
        write_file(&path, &to_csv(&rows)?)?;
        report.written.push(path);
        manifest.push_str(&format!("[[series]]\nid = \"{id}\"\npath = \"{name}\"\nregion = \"other\"\n\n"));
    }
    if !daily {
        manifest.push_str("[format]\ntime_format = \"date_time\"\n\n");
    }
    manifest.push_str("[estimator]\njitter_seed = 0\n");
    let path = out.join(MANIFEST_NAME);
    write_file(&path, &manifest)?;
    report.written.push(path);
    Ok(report)
}
