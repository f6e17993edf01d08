//! CSV rows for every experiment. Each row echoes the parameters it came
//! from; costs that blow up are written as `diverges`.

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::bounds::Cost;
use crate::codecs::CodecSpec;
use crate::control_loop::TraceRow;
use crate::error::{Error, Result};
use crate::scalar::{linear_to_db, Scalar};
use crate::sdr_lab::{linear_sdr, opta_sdr, SdrReport};

fn cost<S: Serializer>(c: &Cost<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match *c {
        Cost::Finite(v) => s.serialize_f64(v),
        Cost::Diverges => s.serialize_str("diverges"),
    }
}

fn opt_cost<S: Serializer>(c: &Option<Cost<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match c {
        Some(c) => cost(c, s),
        None => s.serialize_str(""),
    }
}

/// One SNR point of an SDR sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdrRow {
    pub snr_db: f64,
    pub family: String,
    pub lambda: f64,
    pub delta: f64,
    pub beta: f64,
    pub decoder: String,
    pub sdr_db: f64,
    /// Reference `kc * snr` (the linear 1:1 or repetition code).
    pub sdr_linear_db: f64,
    pub sdr_opta_db: f64,
    pub threshold_rate: f64,
    pub n: usize,
    pub sdr_ci_db: f64,
    pub sdr0_worst_db: Option<f64>,
    pub seed: u64,
}

impl SdrRow {
    pub fn new<T: Scalar>(spec: &CodecSpec<T>, report: &SdrReport<T>, seed: u64) -> Self {
        let snr = report.snr.as_f64();
        let sdr = report.sdr_unbiased.as_f64();
        let half = report.sdr_ci_halfwidth.as_f64();
        let kc = spec.kc;
        Self {
            snr_db: linear_to_db(snr),
            family: spec.family.to_string(),
            lambda: spec.lambda.as_f64(),
            delta: spec.delta.as_f64(),
            beta: spec.beta.as_f64(),
            decoder: spec.decoder.to_string(),
            sdr_db: linear_to_db(sdr),
            sdr_linear_db: linear_to_db(if kc == 1 { snr } else { linear_sdr(snr) }),
            sdr_opta_db: linear_to_db(opta_sdr(snr, kc, spec.ks)),
            threshold_rate: report.threshold_event_rate.as_f64(),
            n: report.n_samples,
            sdr_ci_db: linear_to_db(sdr + half) - linear_to_db(sdr),
            sdr0_worst_db: spec.sdr0_worst.map(|w| linear_to_db(w.as_f64())),
            seed,
        }
    }
}

/// One simulated step of a loop run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceCsvRow {
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub s: f64,
    pub s_hat: f64,
    pub x_hat_enc: f64,
    pub x_hat_dec: f64,
    pub stage_cost: f64,
}

impl<T: Scalar> From<&TraceRow<T>> for TraceCsvRow {
    fn from(r: &TraceRow<T>) -> Self {
        Self {
            t: r.t,
            x: r.x.as_f64(),
            y: r.y.as_f64(),
            u: r.u.as_f64(),
            s: r.s.as_f64(),
            s_hat: r.s_hat.as_f64(),
            x_hat_enc: r.x_hat_enc.as_f64(),
            x_hat_dec: r.x_hat_dec.as_f64(),
            stage_cost: r.stage_cost.as_f64(),
        }
    }
}

/// Parameters shared by every row of a loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopEcho {
    pub snr_db: f64,
    pub alpha: f64,
    pub q: f64,
    pub r: f64,
    pub f: f64,
    pub w: f64,
    pub v: f64,
    pub p0: f64,
    pub codec: String,
    pub decoder: String,
    pub sdr0: f64,
    pub horizon: usize,
    pub seed: u64,
}

/// Per-episode summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub trial: usize,
    #[serde(serialize_with = "cost")]
    pub avg_stage_cost: Cost<f64>,
    pub diverged: bool,
    pub steps: usize,
    #[serde(serialize_with = "cost")]
    pub j_upper: Cost<f64>,
    #[serde(serialize_with = "cost")]
    pub j_lower: Cost<f64>,
    pub snr_db: f64,
    pub alpha: f64,
    pub q: f64,
    pub r: f64,
    pub f: f64,
    pub w: f64,
    pub v: f64,
    pub p0: f64,
    pub codec: String,
    pub decoder: String,
    pub sdr0: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl SummaryRow {
    pub fn new(trial: usize, avg_stage_cost: Cost<f64>, diverged: bool, steps: usize, bounds: (Cost<f64>, Cost<f64>), echo: &LoopEcho) -> Self {
        let e = echo.clone();
        Self {
            trial,
            avg_stage_cost,
            diverged,
            steps,
            j_upper: bounds.0,
            j_lower: bounds.1,
            snr_db: e.snr_db,
            alpha: e.alpha,
            q: e.q,
            r: e.r,
            f: e.f,
            w: e.w,
            v: e.v,
            p0: e.p0,
            codec: e.codec,
            decoder: e.decoder,
            sdr0: e.sdr0,
            horizon: e.horizon,
            seed: e.seed,
        }
    }
}

/// Running average of the stage cost at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunningCostRow {
    pub snr_db: f64,
    pub t: usize,
    /// First episode only; empty after it diverges.
    pub single_path: Option<f64>,
    /// Mean over the episodes still running at `t`.
    pub ensemble: Option<f64>,
    pub live_trials: usize,
    #[serde(serialize_with = "cost")]
    pub j_closed_form: Cost<f64>,
}

/// Closed-form bounds (and optionally a simulated spiral loop) at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub snr_db: f64,
    #[serde(serialize_with = "cost")]
    pub j_lower: Cost<f64>,
    #[serde(serialize_with = "cost")]
    pub j_upper_linear: Cost<f64>,
    #[serde(serialize_with = "opt_cost")]
    pub j_upper_spiral: Option<Cost<f64>>,
    pub alpha_max_opta: f64,
    pub alpha_max_linear: f64,
    pub alpha_max_spiral: Option<f64>,
    pub sdr0_spiral: Option<f64>,
    #[serde(serialize_with = "opt_cost")]
    pub j_sim_spiral: Option<Cost<f64>>,
    pub j_sim_ci: Option<f64>,
    pub alpha: f64,
    pub q: f64,
    pub r: f64,
    pub w: f64,
    pub v: f64,
    pub kc: usize,
}

/// Writes `rows` with a header line.
pub fn write_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

/// Renders `rows` to a string.
pub fn to_csv_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds_row(j_lower: Cost<f64>) -> BoundsRow {
        BoundsRow {
            snr_db: 3.0,
            j_lower,
            j_upper_linear: Cost::Diverges,
            j_upper_spiral: None,
            alpha_max_opta: 3.0,
            alpha_max_linear: 2.0,
            alpha_max_spiral: None,
            sdr0_spiral: None,
            j_sim_spiral: None,
            j_sim_ci: None,
            alpha: 3.0,
            q: 1.0,
            r: 0.0,
            w: 1.0,
            v: 0.0,
            kc: 2,
        }
    }

    #[test]
    fn bounds_header_and_divergence() {
        let text = to_csv_string(&[bounds_row(Cost::Finite(1.5625))]).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("snr_db,j_lower,j_upper_linear,j_upper_spiral,alpha_max_opta,alpha_max_linear,"));
        assert!(lines.next().unwrap().starts_with("3.0,1.5625,diverges,,3.0,2.0,"));
    }

    #[test]
    fn sdr_header_follows_schema() {
        let spec = CodecSpec::<f64>::repetition();
        let report = SdrReport { snr: 10.0, sdr_unbiased: 20.0, sdr_ci_halfwidth: 0.1, threshold_event_rate: 0.0, n_samples: 10 };
        let row = SdrRow::new(&spec, &report, 7);
        assert!((row.sdr_opta_db - linear_to_db(120.0)).abs() < 1e-12);
        assert!((row.sdr_linear_db - linear_to_db(20.0)).abs() < 1e-12);
        let text = to_csv_string(&[row]).unwrap();
        assert!(text.starts_with(
            "snr_db,family,lambda,delta,beta,decoder,sdr_db,sdr_linear_db,sdr_opta_db,threshold_rate,n,"
        ));
        assert!(text.lines().nth(1).unwrap().starts_with("10.0,repetition,1.0,0.0,1.0,ml,"));
    }

    #[test]
    fn trace_header_follows_schema() {
        let row = TraceCsvRow { t: 1, x: 0.0, y: 0.0, u: 0.0, s: 0.0, s_hat: 0.0, x_hat_enc: 0.0, x_hat_dec: 0.0, stage_cost: 0.0 };
        let text = to_csv_string(&[row]).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,x,y,u,s,s_hat,x_hat_enc,x_hat_dec,stage_cost");
    }

    #[test]
    fn summary_echoes_parameters() {
        let echo = LoopEcho {
                snr_db: 3.0,
                alpha: 2.0,
                q: 1.0,
                r: 1.0,
                f: 1.0,
                w: 1.0,
                v: 1.0,
                p0: 1.0,
                codec: "linear".into(),
                decoder: "ml".into(),
                sdr0: 2.0,
                horizon: 10,
                seed: 1,
        };
        let row = SummaryRow::new(0, Cost::Diverges, true, 12, (Cost::Diverges, Cost::Finite(2.0)), &echo);
        let text = to_csv_string(&[row]).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("trial,avg_stage_cost,diverged,steps,j_upper,j_lower,snr_db,alpha,"));
        assert!(lines.next().unwrap().starts_with("0,diverges,true,12,diverges,2.0,3.0,2.0,"));
    }
}
