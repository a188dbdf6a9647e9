use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::analytics::{welfare_summary, CountryFigures, RegionMap, WelfareSummary};
use crate::error::{Error, Result};
use crate::scenario::{compare, RunCode, RunOutcome, SimulationPlan};

/// Leading columns of every report row.
pub const FIXED_COLUMNS: [&str; 14] = [
    "index",
    "year",
    "simulation_id",
    "simulation_type",
    "reference_id",
    "status",
    "start_location",
    "end_location",
    "original_capacity_1",
    "added_capacity_1",
    "original_capacity_2",
    "added_capacity_2",
    "original_capacity_3",
    "added_capacity_3",
];

/// Trailing aggregate columns.
pub const AGGREGATE_COLUMNS: [&str; 8] = [
    "dCS",
    "dPS_EU",
    "dSW_EU",
    "dPS",
    "dSW",
    "dCS_abs_sum",
    "dSW_EU_abs_sum",
    "dSW_tot_abs_sum",
];

const SOLVED: &str = "solved";

/// One line of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub year: i32,
    pub simulation_id: usize,
    pub code: RunCode,
    pub reference: Option<usize>,
    /// `solved`, or the reason the run or its comparison failed.
    pub status: String,
    pub start: Option<String>,
    pub end: Option<String>,
    /// Original and added capacity pairs.
    pub capacities: Option<([f64; 3], [f64; 3])>,
    /// Absolute values for reference rows, changes otherwise.
    pub summary: Option<WelfareSummary>,
}

/// A table of runs with a fixed column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// EU countries with consumers: consumer surplus columns.
    pub cs_countries: Vec<String>,
    /// Countries with consumers: price and consumption columns.
    pub market_countries: Vec<String>,
    /// Countries hosting a trader's source: producer surplus columns.
    pub ps_countries: Vec<String>,
    pub eu: BTreeSet<String>,
    pub rows: Vec<ReportRow>,
}

/// Assemble the report of solved plans. Rows are ordered by year and
/// simulation id. A run without a reference (run 0, or the single run of a
/// calibration year) carries absolute values.
pub fn build_report(years: &[(SimulationPlan, BTreeMap<usize, RunOutcome>)], regions: &RegionMap) -> Result<Report> {
    let Some((first, _)) = years.first() else {
        return Err(Error::InvalidInput("report needs at least one simulated year".into()));
    };
    let base = &first.base;
    let mut market: BTreeSet<String> = BTreeSet::new();
    for (_, n) in base.consumer_nodes() {
        market.insert(n.country.clone());
    }
    let ps: BTreeSet<String> = base
        .traders
        .iter()
        .filter_map(|t| base.node_index(&t.source))
        .map(|i| base.nodes[i].country.clone())
        .collect();
    let eu: BTreeSet<String> = regions.eu.iter().filter(|(_, &e)| e).map(|(c, _)| c.clone()).collect();
    let mut rows = Vec::new();
    let mut order: Vec<&(SimulationPlan, BTreeMap<usize, RunOutcome>)> = years.iter().collect();
    order.sort_by_key(|(p, _)| p.year);
    for (plan, outcomes) in order {
        for run in &plan.runs {
            let outcome = outcomes
                .get(&run.id)
                .ok_or_else(|| Error::InvalidInput(format!("year {} lacks run {}", plan.year, run.id)))?;
            let summary = match run.reference {
                None => match outcome.solved() {
                    Some(sol) => welfare_summary(&outcome.model, sol, None, regions).map_err(|e| e.to_string()),
                    None => Err(outcome.solution.clone().err().unwrap_or_default()),
                },
                Some(r) => match outcomes.get(&r) {
                    Some(reference) => compare(outcome, reference, regions).map_err(|e| e.to_string()),
                    None => Err(format!("reference run {r} missing")),
                },
            };
            let single = (run.mask.expansions.len() == 1 && matches!(run.code, RunCode::R | RunCode::S | RunCode::A))
                .then(|| &plan.update.expansions[run.mask.expansions[0]]);
            let (status, summary) = match summary {
                Ok(s) => (SOLVED.to_string(), Some(s)),
                Err(e) => (format!("failed: {e}"), None),
            };
            rows.push(ReportRow {
                year: plan.year,
                simulation_id: run.id,
                code: run.code,
                reference: run.reference,
                status,
                start: single.map(|e| e.location.clone()),
                end: single.and_then(|e| e.to.clone()),
                capacities: single.and_then(|_| outcome.changes.first()).map(|c| (c.original, c.added)),
                summary,
            });
        }
    }
    Ok(Report {
        cs_countries: market.iter().filter(|c| eu.contains(*c)).cloned().collect(),
        market_countries: market.into_iter().collect(),
        ps_countries: ps.into_iter().collect(),
        eu,
        rows,
    })
}

impl Report {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        h.extend(self.cs_countries.iter().map(|c| format!("dCS_{c}")));
        for c in &self.market_countries {
            h.push(format!("dpiC_{c}"));
            h.push(format!("dsC_{c}"));
        }
        h.extend(self.ps_countries.iter().map(|c| format!("dPS_{c}")));
        h.extend(AGGREGATE_COLUMNS.iter().map(|s| s.to_string()));
        h
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Write `report` as CSV with `#` comment lines describing units and EU
/// membership. Numbers use the shortest round-trip decimal form.
pub fn write_report(report: &Report, out: impl Write) -> Result<()> {
    let mut out = out;
    writeln!(out, "# gaseq report v1")?;
    writeln!(
        out,
        "# units: dCS dPS and aggregates in M€/y; dpiC in k€/mcm; dsC in mcm/d; capacities in mcm/d, storage volume and annual capacities in mcm/y"
    )?;
    writeln!(out, "# rows without reference_id hold absolute values; all other rows hold changes against the reference run")?;
    writeln!(out, "# producer surplus excludes congestion rents of transport, LNG and storage services")?;
    writeln!(out, "# eu: {}", report.eu.iter().cloned().collect::<Vec<_>>().join(" "))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(report.header())?;
    for (index, row) in report.rows.iter().enumerate() {
        let mut rec = vec![
            index.to_string(),
            row.year.to_string(),
            row.simulation_id.to_string(),
            row.code.to_string(),
            opt(&row.reference),
            row.status.clone(),
            opt(&row.start),
            opt(&row.end),
        ];
        match &row.capacities {
            Some((o, a)) => (0..3).for_each(|i| {
                rec.push(num(o[i]));
                rec.push(num(a[i]));
            }),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        let blank = CountryFigures {
            is_eu: false,
            cs: 0.0,
            ps: 0.0,
            price: 0.0,
            consumption: 0.0,
        };
        match &row.summary {
            Some(s) => {
                let get = |c: &String| s.countries.get(c).unwrap_or(&blank);
                rec.extend(report.cs_countries.iter().map(|c| num(get(c).cs)));
                for c in &report.market_countries {
                    rec.push(num(get(c).price));
                    rec.push(num(get(c).consumption));
                }
                rec.extend(report.ps_countries.iter().map(|c| num(get(c).ps)));
                rec.extend(
                    [s.cs_eu, s.ps_eu, s.sw_eu, s.ps_total, s.sw_total, s.cs_abs_sum, s.sw_eu_abs_sum, s.sw_abs_sum]
                        .map(num),
                );
            }
            None => {
                let n = report.cs_countries.len()
                    + 2 * report.market_countries.len()
                    + report.ps_countries.len()
                    + AGGREGATE_COLUMNS.len();
                rec.extend(std::iter::repeat_n(String::new(), n));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A report read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub eu: BTreeSet<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_report(input: impl Read) -> Result<ParsedReport> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let eu = text
        .lines()
        .find_map(|l| l.strip_prefix("# eu:"))
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .unwrap_or_default();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    for col in FIXED_COLUMNS.iter().chain(AGGREGATE_COLUMNS.iter()) {
        if !header.iter().any(|h| h == col) {
            return Err(Error::InvalidInput(format!("report lacks column {col}")));
        }
    }
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(ParsedReport { eu, header, rows })
}

/// Aggregates recomputed from the country columns of one row next to the
/// stored values, in [`AGGREGATE_COLUMNS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCheck {
    pub year: String,
    pub simulation_id: String,
    pub stored: [f64; 8],
    pub derived: [f64; 8],
}

impl AggregateCheck {
    pub fn max_abs_difference(&self) -> f64 {
        self.stored
            .iter()
            .zip(&self.derived)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Recompute the aggregate columns of every complete row.
pub fn rederive_aggregates(report: &ParsedReport) -> Result<Vec<AggregateCheck>> {
    let col = |name: &str| report.header.iter().position(|h| h == name);
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("column {what} holds non-numeric {s:?}")))
    };
    let mut cs: BTreeMap<String, usize> = BTreeMap::new();
    let mut ps: BTreeMap<String, usize> = BTreeMap::new();
    for (i, h) in report.header.iter().enumerate() {
        if let Some(c) = h.strip_prefix("dCS_") {
            if c != "abs_sum" {
                cs.insert(c.to_string(), i);
            }
        } else if let Some(c) = h.strip_prefix("dPS_") {
            if c != "EU" {
                ps.insert(c.to_string(), i);
            }
        }
    }
    let agg: Vec<usize> = AGGREGATE_COLUMNS.iter().map(|c| col(c).expect("checked")).collect();
    let (year, id, status) = (col("year").expect("checked"), col("simulation_id").expect("checked"), col("status").expect("checked"));
    let mut out = Vec::new();
    for row in &report.rows {
        if row[status] != SOLVED {
            continue;
        }
        let mut stored = [0.0; 8];
        for (k, &i) in agg.iter().enumerate() {
            stored[k] = parse(&row[i], AGGREGATE_COLUMNS[k])?;
        }
        let countries: BTreeSet<&String> = cs.keys().chain(ps.keys()).collect();
        let mut d = [0.0; 8];
        for c in countries {
            let is_eu = report.eu.contains(c);
            let cs_v = match cs.get(c) {
                Some(&i) if is_eu => parse(&row[i], &report.header[i])?,
                _ => 0.0,
            };
            let ps_v = match ps.get(c) {
                Some(&i) => parse(&row[i], &report.header[i])?,
                None => 0.0,
            };
            d[0] += cs_v;
            d[3] += ps_v;
            d[5] += cs_v.abs();
            d[7] += (cs_v + ps_v).abs();
            if is_eu {
                d[1] += ps_v;
                d[6] += (cs_v + ps_v).abs();
            }
        }
        d[2] = d[0] + d[1];
        d[4] = d[0] + d[3];
        out.push(AggregateCheck {
            year: row[year].clone(),
            simulation_id: row[id].clone(),
            stored,
            derived: d,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::SolverOptions;
    use crate::market::testing::*;
    use crate::scenario::{build_plan, run_plan, Expansion, ExpansionKind, YearUpdate};

    fn pipe(capacity: f64) -> Expansion {
        Expansion {
            kind: ExpansionKind::Pipeline,
            location: "S".into(),
            to: Some("D".into()),
            capacity,
            extraction: 0.0,
            volume: 0.0,
            decommission: false,
            new_asset: None,
        }
    }

    fn report() -> Report {
        let base = pipeline_pair(0.5, 10.0, Some(50.0));
        let plan = build_plan(&base, &YearUpdate { year: 2020, expansions: vec![pipe(10.0)], ..Default::default() }).unwrap();
        let out = run_plan(&plan, &SolverOptions::default(), 1).unwrap();
        build_report(&[(plan, out)], &RegionMap::from_model(&base)).unwrap()
    }

    #[test]
    fn layout_and_rows() {
        let r = report();
        assert_eq!(r.rows.len(), 6);
        let h = r.header();
        assert_eq!(&h[..14], &FIXED_COLUMNS[..]);
        assert!(h.contains(&"dCS_D".to_string()) && h.contains(&"dPS_S".to_string()));
        assert_eq!(r.rows[0].reference, None);
        let exp = &r.rows[4];
        assert_eq!(exp.code, RunCode::A);
        assert_eq!(exp.start.as_deref(), Some("S"));
        assert_eq!(exp.capacities.unwrap().1[0], 10.0);
        assert!(exp.summary.as_ref().unwrap().cs_eu > 0.0);
    }

    #[test]
    fn csv_round_trip_rederives_aggregates() {
        let r = report();
        let mut buf = Vec::new();
        write_report(&r, &mut buf).unwrap();
        let parsed = read_report(buf.as_slice()).unwrap();
        assert_eq!(parsed.rows.len(), 6);
        assert_eq!(parsed.header, r.header());
        let checks = rederive_aggregates(&parsed).unwrap();
        assert_eq!(checks.len(), 6);
        for c in checks {
            assert!(c.max_abs_difference() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn missing_column_is_rejected() {
        let text = "# eu: D\nindex,year\n0,2020\n";
        assert!(read_report(text.as_bytes()).is_err());
    }
}
