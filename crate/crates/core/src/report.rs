//! CSV serialization of experiment rows and decomposition tables, and a
//! static SVG figure of L1 distance against `n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{NRule, ResultRow, Statistic, TjRow};
use crate::sampling::SchemeKind;

pub const RESULTS_HEADER: &str = "nu,scheme,n_rule,n,N,M,l1,theta,seed";
pub const TJ_HEADER: &str = "c,t1,t2,t3,t4,sum_check";

/// 17 significant digits; enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_budget(row: &ResultRow) -> String {
    match row.statistic {
        Statistic::Incomplete {
            kind: SchemeKind::Bernoulli,
            ..
        } => fmt_float(row.budget),
        _ => format!("{}", row.budget as u128),
    }
}

fn write_records(header: &str, records: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // fields are numbers and fixed tokens, so writing cannot fail
    w.write_record(header.split(',')).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    write_records(
        RESULTS_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_float(r.nu),
                r.statistic.scheme_token().to_string(),
                r.statistic.rule_token().to_string(),
                r.n.to_string(),
                fmt_budget(r),
                r.replications.to_string(),
                fmt_float(r.l1),
                fmt_float(r.theta),
                r.seed.to_string(),
            ]
        }),
    )
}

fn schema(line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| schema(line, format!("column `{name}`: cannot parse `{raw}`")))
}

/// Parses [`results_csv`] output; errors name the 1-based line.
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let line_of = |e: &csv::Error| e.position().map_or(0, |p| p.line() as usize);
    match records.next() {
        Some(Ok(h)) if h.iter().eq(RESULTS_HEADER.split(',')) => {}
        Some(Ok(h)) => {
            let got: Vec<&str> = h.iter().collect();
            return Err(schema(1, format!("expected header `{RESULTS_HEADER}`, got `{}`", got.join(","))));
        }
        Some(Err(e)) => return Err(schema(line_of(&e).max(1), e.to_string())),
        None => return Err(schema(1, "missing header")),
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| schema(line_of(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 9 {
            return Err(schema(line, format!("expected 9 columns, got {}", rec.len())));
        }
        let statistic = Statistic::from_tokens(&rec[1], &rec[2]).map_err(|e| schema(line, e.to_string()))?;
        let row = ResultRow {
            nu: field(line, "nu", &rec[0])?,
            statistic,
            n: field(line, "n", &rec[3])?,
            budget: field(line, "N", &rec[4])?,
            replications: field(line, "M", &rec[5])?,
            l1: field(line, "l1", &rec[6])?,
            theta: field(line, "theta", &rec[7])?,
            seed: field(line, "seed", &rec[8])?,
        };
        if !(row.l1 >= 0.0) || !(row.nu > 0.0 && row.nu.is_finite()) || !(row.budget > 0.0) {
            return Err(schema(line, "need l1 >= 0, finite nu > 0 and N > 0"));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn tj_csv(rows: &[TjRow]) -> String {
    write_records(
        TJ_HEADER,
        rows.iter().map(|r| {
            let [t1, t2, t3, t4] = r.mean_abs;
            [r.level, t1, t2, t3, t4, r.sum_check].iter().map(|&x| fmt_float(x)).collect()
        }),
    )
}

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 380.0;
const LEGEND_W: f64 = 220.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

fn color(s: &Statistic) -> &'static str {
    match s {
        Statistic::Complete => "#000000",
        Statistic::Incomplete { kind, .. } => match kind {
            SchemeKind::WithoutReplacement => "#1f77b4",
            SchemeKind::WithReplacement => "#2ca02c",
            SchemeKind::Bernoulli => "#d62728",
        },
    }
}

fn dash(s: &Statistic) -> &'static str {
    match s {
        Statistic::Complete => "",
        Statistic::Incomplete { rule, .. } => match rule {
            NRule::N32 => "",
            NRule::N => " stroke-dasharray=\"7 4\"",
            NRule::N23 => " stroke-dasharray=\"2 3\"",
        },
    }
}

fn label(s: &Statistic) -> String {
    match s {
        Statistic::Complete => "complete".into(),
        Statistic::Incomplete { kind, rule } => {
            let n = match rule {
                NRule::N32 => "n^(3/2)",
                NRule::N => "n",
                NRule::N23 => "n^(2/3)",
            };
            format!("{} N={}", kind.token(), n)
        }
    }
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 0.1 {
        format!("{v:.2}")
    } else if span >= 0.01 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// One panel per ν (optionally only `nu`), one polyline per statistic,
/// panels laid out in a near-square grid with a shared legend.
pub fn render_svg(rows: &[ResultRow], nu: Option<f64>) -> Result<String> {
    let mut panels: BTreeMap<u64, BTreeMap<Statistic, Vec<(usize, f64)>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| nu.is_none_or(|v| v == r.nu)) {
        // ν > 0, so bit order is numeric order
        panels
            .entry(r.nu.to_bits())
            .or_default()
            .entry(r.statistic)
            .or_default()
            .push((r.n, r.l1));
    }
    if panels.is_empty() {
        return Err(Error::Validation("no rows".into()));
    }
    let k = panels.len();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows_n = k.div_ceil(cols);
    let width = cols as f64 * PANEL_W + LEGEND_W;
    let height = rows_n as f64 * PANEL_H;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let mut all_stats: Vec<Statistic> = Vec::new();
    for (i, (bits, curves)) in panels.iter_mut().enumerate() {
        let nu = f64::from_bits(*bits);
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = (i / cols) as f64 * PANEL_H;
        let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (oy + PANEL_H - MARGIN_B, oy + MARGIN_T);
        let ns: Vec<usize> = {
            let mut v: Vec<usize> = curves.values().flatten().map(|p| p.0).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (nmin, nmax) = (ns[0] as f64, *ns.last().unwrap() as f64);
        let lmax = curves.values().flatten().map(|p| p.1).fold(0.0f64, f64::max);
        let ytop = if lmax > 0.0 { lmax * 1.05 } else { 1.0 };
        let sx = |n: f64| {
            if nmax > nmin {
                x0 + (n - nmin) / (nmax - nmin) * (x1 - x0)
            } else {
                0.5 * (x0 + x1)
            }
        };
        let sy = |l: f64| y0 - l / ytop * (y0 - y1);

        let _ = writeln!(svg, "<g class=\"panel\" data-nu=\"{nu}\">");
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">nu = {nu}</text>",
            0.5 * (x0 + x1),
            oy + 24.0
        );
        let _ = writeln!(
            svg,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
            x1 - x0,
            y0 - y1
        );
        for &n in &ns {
            let x = sx(n as f64);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#444\"/><text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{n}</text>",
                y0 + 5.0,
                y0 + 18.0
            );
        }
        for t in 0..=4 {
            let v = ytop * t as f64 / 4.0;
            let y = sy(v);
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"#444\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                tick_label(v, ytop)
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n</text>",
            0.5 * (x0 + x1),
            y0 + 38.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">L1 distance</text>",
            ox + 16.0,
            0.5 * (y0 + y1),
            ox + 16.0,
            0.5 * (y0 + y1)
        );
        for (stat, pts) in curves.iter_mut() {
            pts.sort_by_key(|p| p.0);
            let coords: Vec<String> = pts
                .iter()
                .map(|&(n, l)| format!("{:.2},{:.2}", sx(n as f64), sy(l)))
                .collect();
            let width = if *stat == Statistic::Complete { 2.5 } else { 1.5 };
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\"{} points=\"{}\"><title>{}</title></polyline>",
                color(stat),
                dash(stat),
                coords.join(" "),
                label(stat)
            );
            if !all_stats.contains(stat) {
                all_stats.push(*stat);
            }
        }
        svg.push_str("</g>\n");
    }
    all_stats.sort();
    let lx = cols as f64 * PANEL_W + 10.0;
    let _ = writeln!(svg, "<g class=\"legend\">");
    for (i, stat) in all_stats.iter().enumerate() {
        let y = MARGIN_T + 20.0 * i as f64;
        let w = if *stat == Statistic::Complete { 2.5 } else { 1.5 };
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"{w}\"{}/><text x=\"{}\" y=\"{}\">{}</text>",
            lx + 36.0,
            color(stat),
            dash(stat),
            lx + 44.0,
            y + 4.0,
            label(stat)
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}
