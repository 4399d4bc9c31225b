//! `denseset bench`: sweep generated instances and tabulate every learner.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;

use denseset::coarse::CoarseStage;
use denseset::dense_ball::BallSearchParams;
use denseset::geometry::{ceil_count, CoverageSet};
use denseset::greedy_union::EllipsoidLearner;
use denseset::{
    coverage_count, dense_ball, dense_ball_isotropic, dense_ellipsoid, gen_clusters, gen_pancake, gen_planted,
    greedy_union, Ellipsoid, Error, GreedyParams, PointSet,
};

pub const COLUMNS: [&str; 11] = [
    "instance_id",
    "d",
    "n",
    "delta",
    "gamma",
    "algo",
    "log_volume",
    "per_dim_ratio_vs_planted",
    "per_dim_ratio_vs_coarse_baseline",
    "coverage",
    "wall_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Planted,
    Pancake,
    Clusters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// The best pair-defined ball (the 2-approximation baseline).
    Coarse,
    Ball,
    BallIso,
    Ellipsoid,
    Union,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Instance families to sweep.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "planted")]
    family: Vec<Family>,
    /// Dimensions to sweep.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    dims: Vec<usize>,
    /// Instances per (family, dimension).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Master seed; every instance seed is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points per instance, as a multiple of d.
    #[arg(long, default_value_t = 20)]
    n_factor: usize,
    #[arg(long, default_value_t = 0.5, value_parser = crate::fraction_incl)]
    delta: f64,
    #[arg(long, default_value_t = 0.2, value_parser = crate::fraction_excl)]
    gamma: f64,
    /// High-variance directions of pancake instances.
    #[arg(long, default_value_t = 2)]
    k_high: usize,
    /// Clusters per cluster instance.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Learners to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "coarse,ball,ball-iso,ellipsoid")]
    algos: Vec<Algo>,
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

struct Instance {
    id: String,
    points: PointSet,
    planted_log_volume: f64,
    k: usize,
    seed: u64,
}

/// SplitMix64 step, used to give each instance its own seed stream.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn instance_seed(master: u64, family: Family, d: usize, rep: usize) -> u64 {
    mix(mix(mix(master) ^ family as u64) ^ d as u64) ^ rep as u64
}

fn build(args: &BenchArgs, family: Family, d: usize, rep: usize) -> Result<Instance, Error> {
    let seed = instance_seed(args.seed, family, d, rep);
    let n = args.n_factor * d;
    let id = format!("{}-d{d}-r{rep}", format!("{family:?}").to_lowercase());
    Ok(match family {
        Family::Planted => {
            let inst = gen_planted(n, d, args.delta, 1.0, 3.0, seed)?;
            Instance {
                id,
                planted_log_volume: inst.planted.log_volume(),
                points: inst.points,
                k: 1,
                seed,
            }
        }
        Family::Pancake => {
            let inst = gen_pancake(n, d, args.k_high.min(d - 1).max(1), args.delta, seed)?;
            Instance {
                id,
                planted_log_volume: inst.planted.log_volume(),
                points: inst.points,
                k: 1,
                seed,
            }
        }
        Family::Clusters => {
            let inst = gen_clusters(n, d, args.k, args.delta, 6.0, seed)?;
            let union = CoverageSet::from_members(inst.planted)?;
            Instance {
                id,
                planted_log_volume: union.log_volume_upper(),
                points: inst.points,
                k: args.k,
                seed,
            }
        }
    })
}

/// `exp((a - b) / d)` with the degenerate volumes handled.
fn per_dim(a: f64, b: f64, d: usize) -> f64 {
    if a == b {
        1.0
    } else {
        ((a - b) / d as f64).exp()
    }
}

fn run_algo(algo: Algo, inst: &Instance, delta: f64, gamma: f64) -> Result<(f64, usize), Error> {
    let y = &inst.points;
    let single = |e: Ellipsoid| -> Result<(f64, usize), Error> { Ok((e.log_volume(), coverage_count(&e, y)?)) };
    match algo {
        Algo::Coarse => {
            let stage = CoarseStage::compute(y, ceil_count(delta, y.len()))?;
            single(Ellipsoid::ball(y.row(stage.best_center).to_vec(), stage.r_min)?)
        }
        Algo::Ball => single(dense_ball(y, &BallSearchParams::new(delta, gamma))?),
        Algo::BallIso => single(dense_ball_isotropic(y, delta, gamma, 1.0, inst.seed)?),
        Algo::Ellipsoid => single(dense_ellipsoid(y, delta, gamma, None)?),
        Algo::Union => {
            let out = greedy_union(y, &GreedyParams::new(delta, gamma, inst.k), &EllipsoidLearner { tau_hat: None })?;
            Ok((out.union.log_volume_upper(), out.coverage))
        }
    }
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn rows_for(args: &BenchArgs, inst: &Instance) -> Result<Vec<Vec<String>>, Error> {
    let d = inst.points.dim();
    let n = inst.points.len();
    let (coarse_log, _) = run_algo(Algo::Coarse, inst, args.delta, args.gamma)?;
    let mut rows = Vec::new();
    for &algo in &args.algos {
        let start = Instant::now();
        let result = run_algo(algo, inst, args.delta, args.gamma);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let name = algo.to_possible_value().expect("no skipped variants").get_name().to_string();
        let (lv, vs_planted, vs_coarse, cov) = match result {
            Ok((lv, cov)) => (
                fmt(lv),
                fmt(per_dim(lv, inst.planted_log_volume, d)),
                fmt(per_dim(lv, coarse_log, d)),
                cov.to_string(),
            ),
            Err(e) => {
                warn!("{} on {}: {e}", name, inst.id);
                (String::new(), String::new(), String::new(), String::new())
            }
        };
        rows.push(vec![
            inst.id.clone(),
            d.to_string(),
            n.to_string(),
            args.delta.to_string(),
            args.gamma.to_string(),
            name,
            lv,
            vs_planted,
            vs_coarse,
            cov,
            format!("{ms:.3}"),
        ]);
    }
    Ok(rows)
}

pub fn run(args: &BenchArgs) -> Result<(), Error> {
    let mut jobs = Vec::new();
    for &family in &args.family {
        for &d in &args.dims {
            if d == 0 {
                return Err(Error::InvalidDimension(0));
            }
            for rep in 0..args.reps {
                jobs.push((family, d, rep));
            }
        }
    }
    let tables: Vec<Result<Vec<Vec<String>>, Error>> = jobs
        .par_iter()
        .map(|&(family, d, rep)| {
            let inst = build(args, family, d, rep)?;
            info!("running {}", inst.id);
            rows_for(args, &inst)
        })
        .collect();

    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(COLUMNS)?;
    for table in tables {
        for row in table? {
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_the_sweep() {
        let a = instance_seed(0, Family::Planted, 16, 0);
        assert_ne!(a, instance_seed(0, Family::Planted, 16, 1));
        assert_ne!(a, instance_seed(0, Family::Pancake, 16, 0));
        assert_ne!(a, instance_seed(1, Family::Planted, 16, 0));
        assert_eq!(a, instance_seed(0, Family::Planted, 16, 0));
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(per_dim(f64::NEG_INFINITY, f64::NEG_INFINITY, 3), 1.0);
        assert_eq!(per_dim(f64::NEG_INFINITY, 0.0, 3), 0.0);
        assert!((per_dim(3.0, 0.0, 3) - 1f64.exp()).abs() < 1e-15);
    }
}
