//! Seeded Monte Carlo execution of the four schemes.
//!
//! Trial `t` of every sweep point draws from `trial_rng(seed, t)`, so sweep
//! points share random numbers. Trials run in parallel, are collected in
//! trial order and aggregated sequentially, which makes the output
//! independent of the thread count.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::config::{DirtyPaperParams, ExperimentConfig, GpFiniteParams, PadChoice, Params, Scheme, WzFiniteParams};
use crate::dirty_paper::{derive_params, random_episode, GaussianFbParams};
use crate::error::{Error, Result};
use crate::gp_finite::{plan_schedule, run_gp_session, GpCodebook, GpCodecConfig, GpRates, GpSchedule, RepetitionCode};
use crate::info::{
    gp_objective, parse_law, search_gp, search_wz, wz_objective, ConditionalLaw, GpChannel, GpLaw, GridSpec, LawFile,
    TypicalitySpec, WzLaw, WzSource,
};
use crate::rng::trial_rng;
use crate::stats::{variance_estimate, Estimate};
use crate::wz_finite::{run_wz_trial, wz_plan, PadPolicy, WzCodebook, WzCodecConfig, WzRates, WzSchedule};
use crate::wz_gaussian::{simulate_wz, FfQuantizerSpec};

/// Column names after `axis,value,trials`, per scheme.
pub fn schema(scheme: Scheme) -> &'static [&'static str] {
    match scheme {
        Scheme::DirtyPaper => &[
            "error_rate",
            "error_rate_se",
            "final_var",
            "final_var_se",
            "final_var_ref",
            "power",
            "power_se",
            "power_ref",
            "first_power",
            "capacity",
            "rate",
        ],
        Scheme::WzGaussian => &[
            "distortion",
            "distortion_se",
            "truncation_rate",
            "in_range_distortion",
            "in_range_distortion_se",
            "limit_distortion",
            "untruncated_distortion",
        ],
        Scheme::GpFinite => &[
            "success",
            "success_se",
            "inversion_failure",
            "termination_error",
            "rate",
            "reliable_rate",
            "objective",
            "net_rate",
            "channel_uses",
            "use_bound",
        ],
        Scheme::WzFinite => &[
            "encode_rate",
            "decode_rate",
            "distortion",
            "distortion_se",
            "exact_distortion",
            "stage_inverse",
            "rate",
            "rate_limit",
            "wz_rate",
            "length",
        ],
    }
}

/// One aggregated sweep point. `fields` follows [`schema`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis: Option<String>,
    pub value: Option<f64>,
    pub trials: usize,
    pub fields: Vec<f64>,
}

impl ResultRow {
    pub fn get(&self, scheme: Scheme, column: &str) -> Option<f64> {
        schema(scheme)
            .iter()
            .position(|c| *c == column)
            .and_then(|i| self.fields.get(i).copied())
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let points: Vec<(Option<String>, Option<f64>, Params)> = match &config.sweep {
        None => vec![(None, None, config.params.clone())],
        Some(s) => s
            .values
            .iter()
            .map(|&v| {
                let mut p = config.params.clone();
                p.set_numeric(&s.axis, v).map_err(|m| Error::Config {
                    line: 0,
                    message: format!("sweep axis `{}`: {m}", s.axis),
                })?;
                Ok((Some(s.axis.clone()), Some(v), p))
            })
            .collect::<Result<_>>()?,
    };
    // validate every point before spending time on trials
    let prepared: Vec<Prepared> = points.iter().map(|(_, _, p)| Prepared::new(p)).collect::<Result<_>>()?;
    if config.trials == 0 {
        return Ok(Vec::new());
    }
    points
        .into_iter()
        .zip(&prepared)
        .map(|((axis, value, _), prep)| {
            let outcomes: Vec<Vec<f64>> = (0..config.trials as u64)
                .into_par_iter()
                .map(|t| prep.trial(&mut trial_rng(config.seed, t)))
                .collect::<Result<_>>()?;
            Ok(ResultRow {
                axis,
                value,
                trials: config.trials,
                fields: prep.aggregate(&outcomes),
            })
        })
        .collect()
}

/// Per-point state built once and shared read-only by all trials.
#[derive(Debug, Clone)]
pub enum Prepared {
    DirtyPaper(GaussianFbParams),
    WzGaussian { spec: FfQuantizerSpec, si_var: f64 },
    GpFinite(Box<GpSetup>),
    WzFinite(Box<WzSetup>),
}

#[derive(Debug, Clone)]
pub struct GpSetup {
    pub law: GpLaw,
    pub schedule: GpSchedule,
    pub codebook: GpCodebook,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct WzSetup {
    pub law: WzLaw,
    pub schedule: WzSchedule,
    pub codebook: WzCodebook,
    pub exact_distortion: f64,
    pub wz_rate: f64,
}

fn read_law(path: &Path) -> Result<LawFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        line: 0,
        message: format!("cannot read law table {}: {e}", path.display()),
    })?;
    parse_law(&text).map_err(|e| match e {
        Error::Config { line, message } => Error::Config {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Law for the finite Gel'fand-Pinsker scheme: the table's law if it has
/// one, otherwise the best law found by grid search.
pub fn gp_law(p: &GpFiniteParams) -> Result<GpLaw> {
    let (channel, aux_size) = match &p.law {
        Some(path) => match read_law(path)? {
            LawFile::Gp { law: Some(law), .. } => return Ok(law),
            LawFile::Gp { channel, aux_size, .. } => (channel, aux_size),
            LawFile::Wz { .. } => return Err(Error::InvalidLaw(format!("{} is a wz table", path.display()))),
        },
        None => (GpChannel::binary_additive(p.state_one, p.flip)?, p.aux_size),
    };
    Ok(search_gp(&channel, &GridSpec::new(p.grid_step, aux_size))?.law)
}

pub fn wz_law(p: &WzFiniteParams) -> Result<WzLaw> {
    match &p.law {
        Some(path) => match read_law(path)? {
            LawFile::Wz { law: Some(law), .. } => Ok(law),
            LawFile::Wz { source, aux_size, .. } => {
                Ok(search_wz(&source, p.max_distortion, &GridSpec::new(p.grid_step, aux_size))?.law)
            }
            LawFile::Gp { .. } => Err(Error::InvalidLaw(format!("{} is a gp table", path.display()))),
        },
        None => Ok(WzLaw::new(
            WzSource::doubly_symmetric(p.flip)?,
            ConditionalLaw::binary_symmetric(p.test_channel)?,
            vec![vec![0, 0], vec![1, 1]],
        )?
        .with_bayes_map()),
    }
}

pub fn gp_setup(p: &GpFiniteParams) -> Result<GpSetup> {
    let law = gp_law(p)?;
    let schedule = plan_schedule(
        p.message_bits,
        GpRates::from_law(&law, p.slack),
        p.iterations,
        p.min_block,
        RepetitionCode::new(p.repetition)?,
    )?;
    let cfg = GpCodecConfig {
        inversion: TypicalitySpec::new(p.inversion_slack)?,
        decoding: TypicalitySpec::new(p.decoding_slack)?,
        hash_seed: p.hash_seed,
    };
    let codebook = GpCodebook::new(&schedule, &law, &cfg);
    Ok(GpSetup {
        objective: gp_objective(&law),
        law,
        schedule,
        codebook,
    })
}

pub fn wz_setup(p: &WzFiniteParams) -> Result<WzSetup> {
    let law = wz_law(p)?;
    let schedule = wz_plan(p.base_len, p.iterations, WzRates::from_law(&law, p.slack))?;
    let cfg = WzCodecConfig {
        shaping: TypicalitySpec::new(p.shaping_slack)?,
        decoding: TypicalitySpec::new(p.decoding_slack)?,
        hash_seed: p.hash_seed,
        pad: match p.pad {
            PadChoice::Zero => PadPolicy::Zero,
            PadChoice::Weighted => PadPolicy::Weighted {
                candidates: p.candidates,
            },
        },
    };
    let codebook = WzCodebook::new(&schedule, &law, &cfg);
    let obj = wz_objective(&law);
    Ok(WzSetup {
        law,
        schedule,
        codebook,
        exact_distortion: obj.distortion,
        wz_rate: obj.rate,
    })
}

fn dirty_paper_params(p: &DirtyPaperParams) -> Result<GaussianFbParams> {
    derive_params(p.power, p.noise_var, p.n, p.rate)?.with_interference_var(p.interference_var)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl Prepared {
    pub fn new(params: &Params) -> Result<Self> {
        Ok(match params {
            Params::DirtyPaper(p) => Prepared::DirtyPaper(dirty_paper_params(p)?),
            Params::WzGaussian(p) => Prepared::WzGaussian {
                spec: FfQuantizerSpec::new(p.l, p.rate, p.epsilon, p.source_var)?,
                si_var: p.si_var,
            },
            Params::GpFinite(p) => Prepared::GpFinite(Box::new(gp_setup(p)?)),
            Params::WzFinite(p) => Prepared::WzFinite(Box::new(wz_setup(p)?)),
        })
    }

    /// Raw per-trial outcomes, aggregated by [`Prepared::aggregate`].
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        Ok(match self {
            Prepared::DirtyPaper(params) => {
                let t = random_episode(params, rng)?;
                let later = mean(t.inputs[1..].iter().map(|x| x * x));
                vec![flag(t.is_correct()), t.estimation_error(), later, t.inputs[0].powi(2)]
            }
            Prepared::WzGaussian { spec, si_var } => {
                let run = simulate_wz(spec, *si_var, 1, rng);
                vec![run.distortion.mean, run.truncation_rate]
            }
            Prepared::GpFinite(g) => {
                let message: Vec<bool> = (0..g.schedule.message_bits).map(|_| rng.random_bool(0.5)).collect();
                match run_gp_session(&g.schedule, &g.law, &g.codebook, &message, rng) {
                    Ok(t) => vec![flag(t.is_correct()), 0.0, flag(!t.termination_correct())],
                    Err(Error::Stage { .. }) => vec![0.0, 1.0, f64::NAN],
                    Err(e) => return Err(e),
                }
            }
            Prepared::WzFinite(w) => {
                let t = run_wz_trial(&w.schedule, &w.law, &w.codebook, rng);
                vec![
                    flag(t.encoded()),
                    flag(t.decoded()),
                    t.distortion(&w.law).unwrap_or(f64::NAN),
                    t.stage_inverse_holds().map_or(f64::NAN, flag),
                ]
            }
        })
    }

    pub fn aggregate(&self, outcomes: &[Vec<f64>]) -> Vec<f64> {
        let column = |i: usize| -> Vec<f64> { outcomes.iter().map(|o| o[i]).filter(|v| !v.is_nan()).collect() };
        match self {
            Prepared::DirtyPaper(params) => {
                let errors: Vec<f64> = column(0).iter().map(|c| 1.0 - c).collect();
                let err = Estimate::from_samples(&errors);
                let var = variance_estimate(&column(1));
                let power = Estimate::from_samples(&column(2));
                vec![
                    err.mean,
                    err.std_error,
                    var.mean,
                    var.std_error,
                    params.final_error_variance(),
                    power.mean,
                    power.std_error,
                    params.power,
                    mean(column(3).into_iter()),
                    params.capacity(),
                    params.rate,
                ]
            }
            Prepared::WzGaussian { spec, .. } => {
                let d = Estimate::from_samples(&column(0));
                let in_range: Vec<f64> = outcomes.iter().filter(|o| o[1] == 0.0).map(|o| o[0]).collect();
                let r = Estimate::from_samples(&in_range);
                vec![
                    d.mean,
                    d.std_error,
                    mean(column(1).into_iter()),
                    r.mean,
                    r.std_error,
                    spec.limit_distortion(),
                    spec.untruncated_distortion(),
                ]
            }
            Prepared::GpFinite(g) => {
                let ok = Estimate::from_samples(&column(0));
                let rate = g.schedule.rate();
                vec![
                    ok.mean,
                    ok.std_error,
                    mean(column(1).into_iter()),
                    mean(column(2).into_iter()),
                    rate,
                    rate * ok.mean,
                    g.objective,
                    g.schedule.rates.net(),
                    g.schedule.channel_uses() as f64,
                    g.schedule.channel_use_bound(),
                ]
            }
            Prepared::WzFinite(w) => {
                let d = Estimate::from_samples(&column(2));
                vec![
                    mean(column(0).into_iter()),
                    mean(column(1).into_iter()),
                    d.mean,
                    d.std_error,
                    w.exact_distortion,
                    mean(column(3).into_iter()),
                    w.schedule.rate(),
                    w.schedule.rate_limit(),
                    w.wz_rate,
                    w.schedule.total_len() as f64,
                ]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::WzGaussianParams;

    #[test]
    fn zero_trials_give_no_rows() {
        let c = ExperimentConfig::new(Params::defaults(Scheme::DirtyPaper), 0, 1);
        assert!(run_experiment(&c).unwrap().is_empty());
    }

    #[test]
    fn invalid_parameters_are_reported_before_running() {
        let mut c = ExperimentConfig::new(Params::defaults(Scheme::WzGaussian), 0, 1);
        c.params = Params::WzGaussian(WzGaussianParams {
            epsilon: 0.6,
            ..Default::default()
        });
        assert!(matches!(run_experiment(&c), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn rows_follow_schema() {
        for scheme in [Scheme::DirtyPaper, Scheme::WzGaussian] {
            let c = ExperimentConfig::new(Params::defaults(scheme), 20, 4);
            let rows = run_experiment(&c).unwrap();
            assert_eq!(rows.len(), 1);
            assert_eq!(rows[0].fields.len(), schema(scheme).len());
            assert_eq!(rows[0].trials, 20);
        }
    }

    #[test]
    fn dirty_paper_references() {
        let c = ExperimentConfig::new(Params::defaults(Scheme::DirtyPaper), 200, 4);
        let row = &run_experiment(&c).unwrap()[0];
        let get = |k| row.get(Scheme::DirtyPaper, k).unwrap();
        assert_eq!(get("capacity"), 0.5);
        assert!((get("final_var_ref") / 2f64.powi(-15) - 1.0).abs() < 1e-12);
        assert_eq!(get("power_ref"), 1.0);
        assert!((get("power") - 1.0).abs() < 5.0 * get("power_se"));
    }
}
