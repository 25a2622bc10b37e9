//! Experiment pipeline: renormalize, run the requested diagnostics, collect
//! tables, fits and checks.

use std::collections::{BTreeMap, HashMap};

use giem_core::combinatorics::{combinatorial_bound, StepType};
use giem_core::fit::{fit_decay, Abscissa};
use giem_core::giem::{default_tolerance, Giem};
use giem_core::renorm::{
    check_prop31, convergence_table, first_return_bruteforce, geometry_report, partition_from_tower,
    renormalize, ConvergenceRow, RenormTrace,
};
use giem_core::symbolic::{translate_piece, Tower};
use giem_core::{DoubleDouble, GiemError, Precision, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{json_num, json_num_opt, num, Table};

const ORACLE_LEVELS: usize = 10;
const ORACLE_POINTS: usize = 100;
const ORACLE_MAX_ITER: usize = 10_000_000;
const CONSISTENCY_LEVELS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Soft,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitEntry {
    pub series: &'static str,
    pub abscissa: &'static str,
    #[serde(serialize_with = "json_num_opt")]
    pub slope: Option<f64>,
    #[serde(serialize_with = "json_num_opt")]
    pub intercept: Option<f64>,
    #[serde(serialize_with = "json_num_opt")]
    pub residual: Option<f64>,
    pub points: usize,
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub map_kind: &'static str,
    pub precision: String,
    pub letters: Vec<String>,
    pub n_max: usize,
    pub levels: usize,
    pub stop_reason: String,
    #[serde(serialize_with = "json_num")]
    pub final_length: f64,
    pub fits: Vec<FitEntry>,
    pub checks: Vec<CheckResult>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

pub struct Outcome {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

/// Runs the configured experiments in the selected precision.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let precision = cfg.effective_precision()?;
    match precision {
        Precision::Binary64 => Pipeline::<f64>::new(cfg, precision)?.run(),
        Precision::Extended(_) => Pipeline::<DoubleDouble>::new(cfg, precision)?.run(),
    }
}

struct Pipeline<'a, T: Real> {
    cfg: &'a ExperimentConfig,
    precision: Precision,
    trace: RenormTrace<T>,
    names: Vec<String>,
    checks: Vec<CheckResult>,
    tables: Vec<Table>,
    fits: Vec<FitEntry>,
    rows: Option<Vec<ConvergenceRow>>,
    tower: Option<Tower<T>>,
}

impl<'a, T: Real> Pipeline<'a, T> {
    fn new(cfg: &'a ExperimentConfig, precision: Precision) -> Result<Self, CliError> {
        let f: Giem<T> = cfg.map.build()?;
        f.validate(default_tolerance::<T>()).map_err(CliError::Map)?;
        let trace = renormalize(&f, cfg.n_max);
        let names = f.alphabet().names().to_vec();
        Ok(Pipeline {
            cfg,
            precision,
            trace,
            names,
            checks: Vec::new(),
            tables: Vec::new(),
            fits: Vec::new(),
            rows: None,
            tower: None,
        })
    }

    fn check(&mut self, severity: Severity, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult { name: name.to_string(), severity, passed, detail: detail.into() });
    }

    /// Records an engine error as a failed check; precision and tie stops are soft.
    fn engine_error(&mut self, name: &str, e: &GiemError) {
        let severity = match e {
            GiemError::PrecisionExhausted { .. }
            | GiemError::Tie { .. }
            | GiemError::BudgetExceeded(_)
            | GiemError::LevelOutOfRange(_) => Severity::Soft,
            _ => Severity::Hard,
        };
        self.check(severity, name, false, e.to_string());
    }

    fn d(&self) -> usize {
        self.trace.map.d()
    }

    fn levels(&self) -> usize {
        self.trace.levels()
    }

    fn wants(&self, e: Experiment) -> bool {
        self.cfg.experiments.contains(&e)
    }

    fn run(mut self) -> Result<Outcome, CliError> {
        let stop_reason = match &self.trace.stop {
            None => "reached n_max".to_string(),
            Some(e) => e.to_string(),
        };
        let levels = self.levels();
        self.check(
            Severity::Soft,
            "renorm: reached n_max",
            levels == self.cfg.n_max,
            format!("{levels} of {} levels; {stop_reason}", self.cfg.n_max),
        );
        if self.wants(Experiment::Renorm) {
            self.renorm();
        }
        if self.wants(Experiment::Convergence) {
            self.convergence();
        }
        if self.wants(Experiment::Partition) || self.wants(Experiment::Symbolic) {
            self.build_tower();
        }
        if self.wants(Experiment::Partition) {
            self.partition();
        }
        if self.wants(Experiment::Symbolic) {
            self.symbolic();
        }
        if self.wants(Experiment::Prop31) {
            self.prop31();
        }
        if self.wants(Experiment::Geometry) {
            self.geometry();
        }
        let exit_code = if self.checks.iter().any(|c| !c.passed && c.severity == Severity::Hard) {
            2
        } else if self.checks.iter().any(|c| !c.passed) {
            1
        } else {
            0
        };
        let report = RunReport {
            map_kind: self.cfg.map.kind(),
            precision: self.precision.label(),
            letters: self.names.clone(),
            n_max: self.cfg.n_max,
            levels,
            stop_reason,
            final_length: self.trace.states[levels].total_length().to_f64(),
            fits: self.fits,
            checks: self.checks,
            outputs: self.tables.iter().map(|t| t.name.to_string()).collect(),
            exit_code,
        };
        Ok(Outcome { report, tables: self.tables })
    }

    fn renorm(&mut self) {
        let levels = self.levels();
        let mut table = Table::new("steps.csv", &["n", "type", "winner", "loser", "q_per_letter"]);
        for (n, st) in self.trace.steps.iter().enumerate() {
            let q = &self.trace.states[n + 1].q;
            table.row(&[
                n.to_string(),
                st.step_type.index().to_string(),
                self.names[st.winner].clone(),
                self.names[st.loser].clone(),
                q.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
            ]);
        }
        self.tables.push(table);

        let moves_ok = self.trace.steps.iter().enumerate().all(|(n, st)| {
            self.trace.states[n + 1].perm == self.trace.states[n].perm.rauzy_move(st.step_type)
        });
        self.check(Severity::Hard, "renorm: permutations follow the recorded moves", moves_ok, "");

        let scale = self.trace.map.total_length().to_f64();
        let mut worst: f64 = 0.0;
        for (n, st) in self.trace.steps.iter().enumerate() {
            let (prev, next) = (&self.trace.states[n], &self.trace.states[n + 1]);
            let removed = match st.step_type {
                StepType::Zero => prev.image_lengths[st.loser],
                StepType::One => prev.lengths[st.loser],
            };
            let e = (next.total_length() + removed - prev.total_length()).abs().to_f64();
            worst = worst.max(e);
        }
        self.check(
            Severity::Hard,
            "renorm: length bookkeeping",
            worst <= 1e-12 * scale,
            format!("max error {worst:.3e}"),
        );

        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let (mut time_bad, mut value_err) = (0usize, 0.0f64);
        let top = levels.min(ORACLE_LEVELS);
        for n in 0..=top {
            let s = &self.trace.states[n];
            let len = s.total_length();
            let points: Vec<T> =
                (0..ORACLE_POINTS).map(|_| T::from_f64(rng.random::<f64>()) * len).collect();
            let samples = match first_return_bruteforce(&self.trace.map, T::zero(), len, &points, ORACLE_MAX_ITER) {
                Ok(v) => v,
                Err(e) => {
                    self.engine_error("renorm: return times against direct iteration", &e);
                    return;
                }
            };
            for sample in samples {
                match s.letter_at(sample.x) {
                    Some(a) if sample.time == s.return_time(a) => {}
                    _ => time_bad += 1,
                }
                match self.trace.first_return_value(n, sample.x) {
                    Ok(v) => value_err = value_err.max((v - sample.value).abs().to_f64()),
                    Err(_) => time_bad += 1,
                }
            }
        }
        self.check(
            Severity::Hard,
            "renorm: return times against direct iteration",
            time_bad == 0,
            format!("{time_bad} mismatches, levels 0..={top}, {ORACLE_POINTS} points per level"),
        );
        self.check(
            Severity::Hard,
            "renorm: return values against direct iteration",
            value_err <= 1e-9 * scale,
            format!("max error {value_err:.3e}"),
        );
    }

    fn convergence(&mut self) {
        let levels = self.levels();
        let rows = match convergence_table(&self.trace, levels, self.cfg.grid) {
            Ok(rows) => rows,
            Err(e) => {
                self.engine_error("convergence: table", &e);
                return;
            }
        };
        let mut table = Table::new(
            "convergence.csv",
            &["n", "alpha", "N_alpha_n", "d_moebius", "d_identity", "thm2_residual", "len_I_n", "P_norm"],
        );
        for r in &rows {
            table.row(&[
                r.level.to_string(),
                self.names[r.letter].clone(),
                num(r.mean_nonlinearity),
                num(r.d_moebius),
                num(r.d_identity),
                num(r.thm2_residual),
                num(r.level_length),
                num(r.partition_norm),
            ]);
        }
        let expected = (levels + 1) * self.d();
        let count = table.rows();
        self.tables.push(table);
        self.check(
            Severity::Hard,
            "convergence: one row per level and letter",
            count == expected,
            format!("{count} rows, expected {expected}"),
        );

        let gap = rows
            .iter()
            .filter(|r| r.level <= CONSISTENCY_LEVELS)
            .map(|r| (r.mean_nonlinearity - r.orbit_sum).abs())
            .fold(0.0, f64::max);
        self.check(
            Severity::Hard,
            "convergence: chain-rule and orbit-sum mean nonlinearity agree",
            gap <= 1e-9,
            format!("max difference {gap:.3e} for n <= {CONSISTENCY_LEVELS}"),
        );
        if self.cfg.map.is_moebius() {
            let worst = rows.iter().map(|r| r.d_moebius).fold(0.0, f64::max);
            self.check(
                Severity::Hard,
                "convergence: renormalized branches stay fractional linear",
                worst <= 1e-8,
                format!("max d_moebius {worst:.3e}"),
            );
        }
        if self.cfg.map.is_affine() {
            let worst = rows
                .iter()
                .map(|r| r.d_moebius.max(r.d_identity).max(r.thm2_residual).max(r.mean_nonlinearity.abs()))
                .fold(0.0, f64::max);
            self.check(
                Severity::Hard,
                "convergence: affine maps have vanishing diagnostics",
                worst <= 1e-9,
                format!("max {worst:.3e}"),
            );
        }

        let series = |f: &dyn Fn(&ConvergenceRow) -> f64| -> Vec<(usize, f64)> {
            (0..=levels)
                .map(|n| (n, rows.iter().filter(|r| r.level == n).map(f).fold(0.0, f64::max)))
                .collect()
        };
        let d_moebius = series(&|r| r.d_moebius);
        let d_identity = series(&|r| r.d_identity);
        let residual = series(&|r| r.thm2_residual);
        let mean = series(&|r| r.mean_nonlinearity.abs());
        let norm = series(&|r| r.partition_norm);
        for (name, s) in [
            ("d_moebius", &d_moebius),
            ("d_identity", &d_identity),
            ("thm2_residual", &residual),
            ("abs_N_alpha_n", &mean),
            ("P_norm", &norm),
        ] {
            self.fit(name, s);
        }
        if !self.cfg.map.is_moebius() {
            match fit_decay(&d_moebius, Abscissa::N) {
                Ok(fit) => self.check(
                    Severity::Soft,
                    "convergence: d_moebius decays",
                    fit.slope < 0.0,
                    format!("slope {:.4e} against n", fit.slope),
                ),
                Err(e) => self.check(Severity::Soft, "convergence: d_moebius decays", false, e.to_string()),
            }
        }
        self.rows = Some(rows);
    }

    fn fit(&mut self, series: &'static str, points: &[(usize, f64)]) {
        for (abscissa, label) in [(Abscissa::N, "n"), (Abscissa::SqrtN, "sqrt_n")] {
            let entry = match fit_decay(points, abscissa) {
                Ok(f) => FitEntry {
                    series,
                    abscissa: label,
                    slope: Some(f.slope),
                    intercept: Some(f.intercept),
                    residual: Some(f.residual),
                    points: f.points,
                    skipped: points.len() - f.points,
                    error: None,
                },
                Err(e) => FitEntry {
                    series,
                    abscissa: label,
                    slope: None,
                    intercept: None,
                    residual: None,
                    points: 0,
                    skipped: points.iter().filter(|p| p.1.is_nan() || p.1 <= 0.0).count(),
                    error: Some(e.to_string()),
                },
            };
            self.fits.push(entry);
        }
    }

    /// Deepest tower within the configured depth and interval budget.
    fn build_tower(&mut self) {
        let d = self.d();
        let wanted = self.cfg.symbolic_depth.min(self.levels());
        let mut used = 2 * d;
        let mut depth = 0;
        while depth < wanted {
            let s = &self.trace.states[depth + 1];
            used += (0..d).map(|a| s.return_time(a) + 1).sum::<usize>();
            if used > self.cfg.budget {
                break;
            }
            depth += 1;
        }
        self.check(
            Severity::Soft,
            "cylinders: requested depth within budget",
            depth == wanted,
            format!("depth {depth} of {wanted}, budget {}", self.cfg.budget),
        );
        match Tower::build(&self.trace, depth, self.cfg.budget) {
            Ok(t) => self.tower = Some(t),
            Err(e) => self.engine_error("cylinders: construction", &e),
        }
    }

    fn partition(&mut self) {
        let Some(tower) = self.tower.take() else { return };
        let scale = self.trace.map.total_length().to_f64();
        let tol = 1e-9 * scale;
        let mut table = Table::new(
            "partition.csv",
            &["n", "alpha", "i", "left", "len", "parent_alpha", "parent_i"],
        );
        let (mut tiling, mut nesting, mut counts) = (0.0f64, 0usize, true);
        let mut norms = Vec::new();
        let mut prev: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for n in 0..=tower.depth() {
            let snap = match partition_from_tower(&self.trace, &tower, n) {
                Ok(s) => s,
                Err(e) => {
                    self.engine_error("partition: snapshot", &e);
                    break;
                }
            };
            norms.push((n, snap.norm));
            let s = &self.trace.states[n];
            counts &= snap.intervals.len() == (0..self.d()).map(|a| s.return_time(a)).sum::<usize>();
            let mut x = 0.0;
            let mut current = HashMap::with_capacity(snap.intervals.len());
            for iv in &snap.intervals {
                tiling = tiling.max((iv.left - x).abs());
                x = iv.left + iv.len;
                current.insert((iv.letter, iv.index), (iv.left, iv.len));
                if n > 0 {
                    let inside = iv.parent.and_then(|p| prev.get(&p)).is_some_and(|&(l, len)| {
                        l - tol <= iv.left && iv.left + iv.len <= l + len + tol
                    });
                    if !inside {
                        nesting += 1;
                    }
                }
                let (pa, pi) = match iv.parent {
                    Some((b, j)) => (self.names[b].clone(), j.to_string()),
                    None => (String::new(), String::new()),
                };
                table.row(&[
                    n.to_string(),
                    self.names[iv.letter].clone(),
                    iv.index.to_string(),
                    num(iv.left),
                    num(iv.len),
                    pa,
                    pi,
                ]);
            }
            tiling = tiling.max((x - scale).abs());
            prev = current;
        }
        self.tables.push(table);
        self.check(
            Severity::Hard,
            "partition: orbit intervals tile the domain",
            tiling <= tol,
            format!("max gap {tiling:.3e}, levels 0..={}", tower.depth()),
        );
        self.check(Severity::Hard, "partition: interval counts equal the return times", counts, "");
        self.check(
            Severity::Hard,
            "partition: each interval lies in its tagged parent",
            nesting == 0,
            format!("{nesting} violations"),
        );
        if self.rows.is_none() {
            self.fit("P_norm", &norms);
        }
        self.tower = Some(tower);
    }

    fn symbolic(&mut self) {
        let Some(tower) = self.tower.take() else { return };
        let depth = tower.depth();
        let mut header: Vec<String> =
            ["n", "s", "memory_decay_max_log_ratio", "mixing_gap"].iter().map(|s| s.to_string()).collect();
        header.extend(self.names.iter().map(|a| format!("ell_star_{a}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut table = Table::new("symbolic.csv", &header);
        let mut measure_err: f64 = 0.0;
        let mut memory: f64 = 0.0;
        let mut failure = None;
        for n in 0..=depth {
            match tower.cylinders(n) {
                Ok(c) => {
                    let sum: f64 = c.iter().map(|c| c.measure).sum();
                    measure_err = measure_err.max((sum - 1.0).abs());
                }
                Err(e) => failure = Some(e),
            }
            if n == 0 {
                continue;
            }
            let mix = match tower.mixing_gap(n) {
                Ok(m) => m,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };
            for s in 1..=n {
                let md = match tower.memory_decay(n, s) {
                    Ok(v) => {
                        memory = memory.max(v);
                        num(v)
                    }
                    Err(GiemError::NoValidPairs) => String::new(),
                    Err(e) => {
                        failure = Some(e);
                        String::new()
                    }
                };
                let mut cells = vec![n.to_string(), s.to_string(), md, num(mix.gap)];
                cells.extend(mix.ell_star.iter().map(|&v| num(v)));
                table.row(&cells);
            }
        }
        self.tables.push(table);
        if let Some(e) = failure {
            self.engine_error("symbolic: diagnostics", &e);
        }
        self.check(
            Severity::Hard,
            "symbolic: cylinder measures sum to 1",
            measure_err <= 1e-9,
            format!("max error {measure_err:.3e}, levels 0..={depth}"),
        );
        let k = combinatorial_bound(&self.trace.steps, self.d());
        let trace = &self.trace;
        let lemmas = tower.check_word_lemmas(depth, k.unwrap_or(usize::MAX), |m, a, i, j| {
            translate_piece(trace, &tower, m, a, i, j)
        });
        let window = k.map_or("no k-bound certified".to_string(), |k| format!("k = {k}"));
        match lemmas {
            Ok(r) => self.check(
                Severity::Hard,
                "symbolic: word lemmas",
                true,
                format!(
                    "{window}; {} translations, {} concatenations, {} joined pairs",
                    r.translations, r.concatenations, r.joined_pairs
                ),
            ),
            Err(e) => self.check(Severity::Hard, "symbolic: word lemmas", false, format!("{window}; {e}")),
        }
        if self.cfg.map.is_affine() {
            self.check(
                Severity::Hard,
                "symbolic: affine conditionals ignore the deep past",
                memory <= 1e-9,
                format!("max memory decay {memory:.3e}"),
            );
        }
        self.tower = Some(tower);
    }

    fn prop31(&mut self) {
        let d = self.d();
        let i_max = self.cfg.n_max.min(self.levels() / (d - 1).max(1)).max(1);
        let tol = 1e-9 * self.trace.map.total_length().to_f64();
        let report = match check_prop31(&self.trace.map, i_max, tol) {
            Ok(r) => r,
            Err(e) => {
                self.engine_error("prop31: tower correspondence", &e);
                return;
            }
        };
        let mut table = Table::new("prop31.csv", &["i", "m_i", "gap", "two_type", "rotation_level"]);
        for (i, &m) in report.matches.iter().enumerate() {
            table.row(&[
                i.to_string(),
                m.to_string(),
                if i == 0 { String::new() } else { (m - report.matches[i - 1]).to_string() },
                report.two_types.get(i).map_or(String::new(), |t| t.index().to_string()),
                u8::from(report.rotation_levels.contains(&i)).to_string(),
            ]);
        }
        self.tables.push(table);
        self.check(
            Severity::Hard,
            "prop31: consecutive matching levels differ by less than d",
            report.max_gap < d,
            format!(
                "max gap {} for d = {d}, i <= {i_max}, max value error {:.3e}",
                report.max_gap, report.max_value_error
            ),
        );
    }

    fn geometry(&mut self) {
        let levels = self.levels();
        let mut table = Table::new(
            "geometry.csv",
            &["n", "domain_ratio", "image_ratio", "winner_loser_ratio", "min_derivative", "max_derivative"],
        );
        let mut reports = Vec::with_capacity(levels + 1);
        for n in 0..=levels {
            match geometry_report(&self.trace, n, self.cfg.grid) {
                Ok(g) => reports.push(g),
                Err(e) => {
                    self.engine_error("geometry: report", &e);
                    break;
                }
            }
        }
        for g in &reports {
            table.row(&[
                g.level.to_string(),
                num(g.domain_ratio),
                num(g.image_ratio),
                g.winner_loser_ratio.map_or(String::new(), num),
                num(g.min_derivative),
                num(g.max_derivative),
            ]);
        }
        self.tables.push(table);
        if self.cfg.map.is_isometric() {
            let worst = reports
                .iter()
                .map(|g| (g.min_derivative - 1.0).abs().max((g.max_derivative - 1.0).abs()))
                .fold(0.0, f64::max);
            self.check(
                Severity::Hard,
                "geometry: isometries have unit derivative",
                worst <= 1e-9,
                format!("max deviation {worst:.3e}"),
            );
        }
        if let Some(k) = combinatorial_bound(&self.trace.steps, self.d()) {
            let ratios: Vec<f64> = reports.iter().filter_map(|g| g.winner_loser_ratio).collect();
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            self.check(
                Severity::Soft,
                "geometry: winner/loser ratio bounded away from 0 and 1",
                ratios.is_empty() || (lo > 0.01 && hi < 0.99),
                format!("range [{lo:.4}, {hi:.4}], k = {k}"),
            );
        }
    }
}

/// Groups the report's checks by severity for printing.
pub fn summary(report: &RunReport) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for c in &report.checks {
        let key = match (c.passed, c.severity) {
            (true, _) => "passed",
            (false, Severity::Hard) => "hard failures",
            (false, Severity::Soft) => "soft failures",
        };
        *m.entry(key).or_insert(0) += 1;
    }
    m
}
