use std::io::Write;

use serde::{Deserialize, Serialize};

use super::solver::FlowMode;
use super::FlowError;

pub const DIAGNOSTICS_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sup_phi: f64,
    pub sup_phidot: f64,
    /// Smallest eigenvalue of `g̃` over the grid.
    pub min_eig: f64,
    #[serde(rename = "inf_R")]
    pub inf_r: f64,
    #[serde(rename = "sup_R")]
    pub sup_r: f64,
    /// `sup tr_{g0} g̃`.
    pub sup_trace: f64,
    /// Grid mean of `det g̃`.
    pub volume: f64,
    /// Root-mean-square oscillation of `φ`.
    pub energy: f64,
    #[serde(skip)]
    pub max_eig: f64,
}

/// Records in strictly increasing time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub schema: u32,
    pub mode: FlowMode,
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsSeries {
    pub fn new(mode: FlowMode) -> Self {
        Self {
            schema: DIAGNOSTICS_SCHEMA,
            mode,
            records: Vec::new(),
        }
    }

    /// Appends a record; later records with a non-increasing time are dropped.
    pub fn push(&mut self, record: DiagnosticsRecord) -> bool {
        if self.records.last().is_some_and(|last| record.t <= last.t) {
            return false;
        }
        self.records.push(record);
        true
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FlowError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(|e| FlowError::Io(e.to_string()))?;
        }
        if self.records.is_empty() {
            w.write_record(CSV_HEADER).map_err(|e| FlowError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| FlowError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("series serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FlowError> {
        let series: Self = serde_json::from_str(text).map_err(|e| FlowError::Io(e.to_string()))?;
        if series.schema != DIAGNOSTICS_SCHEMA {
            return Err(FlowError::Io(format!("unsupported diagnostics schema {}", series.schema)));
        }
        Ok(series)
    }

    pub fn read_csv(text: &str, mode: FlowMode) -> Result<Self, FlowError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut series = Self::new(mode);
        for rec in r.deserialize() {
            let mut rec: DiagnosticsRecord = rec.map_err(|e| FlowError::Io(e.to_string()))?;
            rec.max_eig = f64::NAN;
            series.push(rec);
        }
        Ok(series)
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "t",
    "sup_phi",
    "sup_phidot",
    "min_eig",
    "inf_R",
    "sup_R",
    "sup_trace",
    "volume",
    "energy",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Best constant observed for the estimate.
    pub constant: f64,
    pub detail: String,
}

/// Least-squares fit of `log sup|φ̇| ≈ log C - μ t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub verdicts: Vec<Verdict>,
    pub decay: Option<DecayFit>,
}

impl EstimateReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Tolerance for the scalar curvature floor and for the potential bound.
pub const ESTIMATE_TOL: f64 = 1e-4;

/// Values of `sup|φ̇|` below this are treated as round-off in the decay fit.
const DECAY_FLOOR: f64 = 1e-13;

/// Checks the series against the standard a priori estimates: bounded
/// potential, scalar curvature bounded below by its initial infimum, uniform
/// equivalence with the reference metric, and (normalized flow) exponential
/// decay of `φ̇`.
pub fn estimate_report(series: &DiagnosticsSeries) -> EstimateReport {
    let recs = &series.records;
    let mut verdicts = Vec::new();
    if recs.is_empty() {
        return EstimateReport { verdicts, decay: None };
    }
    let finite = recs.iter().all(|r| {
        [r.sup_phi, r.sup_phidot, r.min_eig, r.inf_r, r.sup_r, r.sup_trace]
            .iter()
            .all(|v| v.is_finite())
    });

    let half = recs.len() / 2;
    let max_of = |rs: &[DiagnosticsRecord]| rs.iter().map(|r| r.sup_phi).fold(0.0, f64::max);
    let c0 = max_of(recs);
    let early = max_of(&recs[..half.max(1)]);
    let late_growth = max_of(&recs[half..]) - early;
    verdicts.push(Verdict {
        name: "C0 bound on potential".into(),
        pass: finite && late_growth <= ESTIMATE_TOL * c0.max(1.0),
        constant: c0,
        detail: format!("sup|phi| <= {c0:.6e}; growth over second half {late_growth:.3e}"),
    });

    let r0 = recs[0].inf_r;
    let r_min = recs.iter().map(|r| r.inf_r).fold(f64::INFINITY, f64::min);
    verdicts.push(Verdict {
        name: "scalar curvature floor".into(),
        pass: finite && r_min >= r0 - ESTIMATE_TOL,
        constant: r_min,
        detail: format!("inf R(0) = {r0:.6e}, min over run {r_min:.6e}"),
    });

    let lam = recs.iter().map(|r| r.min_eig).fold(f64::INFINITY, f64::min);
    let tr = recs.iter().map(|r| r.sup_trace).fold(0.0, f64::max);
    verdicts.push(Verdict {
        name: "metric equivalence".into(),
        pass: finite && lam > 0.0,
        constant: tr.max(1.0 / lam),
        detail: format!("min eigenvalue {lam:.6e}, sup trace {tr:.6e}"),
    });

    let decay = fit_decay(series);
    if series.mode == FlowMode::Normalized {
        let (pass, constant, detail) = match decay {
            Some(fit) => (
                finite && fit.rate > 0.0,
                fit.rate,
                format!("sup|phidot| ~ {:.3e} e^(-{:.4} t) over {} points", fit.prefactor, fit.rate, fit.points),
            ),
            None => (finite, f64::INFINITY, "phidot below round-off throughout".into()),
        };
        verdicts.push(Verdict {
            name: "exponential decay of phidot".into(),
            pass,
            constant,
            detail,
        });
    }
    EstimateReport { verdicts, decay }
}

/// Fits the later half of the records above round-off level.
pub fn fit_decay(series: &DiagnosticsSeries) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .records
        .iter()
        .filter(|r| r.sup_phidot > DECAY_FLOOR)
        .map(|r| (r.t, r.sup_phidot.ln()))
        .collect();
    let pts = &pts[pts.len() / 2..];
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in pts {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(DecayFit {
        rate: -slope,
        prefactor: (my - slope * mt).exp(),
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, phidot: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            sup_phi: 1.0,
            sup_phidot: phidot,
            min_eig: 0.5,
            inf_r: 0.0,
            sup_r: 0.0,
            sup_trace: 2.0,
            volume: 1.0,
            energy: 0.0,
            max_eig: 1.0,
        }
    }

    #[test]
    fn csv_header_is_fixed() {
        let mut s = DiagnosticsSeries::new(FlowMode::Unnormalized);
        s.push(rec(0.0, 1.0));
        let text = s.to_csv_string();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let empty = DiagnosticsSeries::new(FlowMode::Unnormalized).to_csv_string();
        assert_eq!(empty.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn push_keeps_time_strictly_increasing() {
        let mut s = DiagnosticsSeries::new(FlowMode::Unnormalized);
        assert!(s.push(rec(0.0, 1.0)));
        assert!(!s.push(rec(0.0, 1.0)));
        assert!(s.push(rec(0.5, 1.0)));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let mut s = DiagnosticsSeries::new(FlowMode::Normalized);
        s.push(rec(0.0, 1.0));
        s.push(rec(1.0, 0.25));
        let back = DiagnosticsSeries::from_json(&s.to_json()).unwrap();
        assert_eq!(back.records[1].sup_phidot, 0.25);
        let csv = DiagnosticsSeries::read_csv(&s.to_csv_string(), FlowMode::Normalized).unwrap();
        assert_eq!(csv.records[1].t, 1.0);
        assert!(s.to_json().contains("\"inf_R\""));
    }

    #[test]
    fn decay_fit_recovers_rate() {
        let mut s = DiagnosticsSeries::new(FlowMode::Normalized);
        for i in 0..20 {
            let t = i as f64 * 0.25;
            s.push(rec(t, 3.0 * (-1.5 * t).exp()));
        }
        let fit = fit_decay(&s).unwrap();
        assert!((fit.rate - 1.5).abs() < 1e-10);
        assert!((fit.prefactor - 3.0).abs() < 1e-8);
        assert!(estimate_report(&s).all_pass());
    }

    #[test]
    fn curvature_drop_fails_floor() {
        let mut s = DiagnosticsSeries::new(FlowMode::Unnormalized);
        s.push(rec(0.0, 0.0));
        let mut r = rec(1.0, 0.0);
        r.inf_r = -1.0;
        s.push(r);
        let report = estimate_report(&s);
        assert!(!report.verdicts[1].pass);
    }
}
