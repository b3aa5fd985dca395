//! Model specifications on the command line and sample points for pointwise checks.

use anyhow::{bail, Context};
use cgflow::{GhData, MetricModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};

/// `flat4`, `cp2`, `half_plane`, `taub_nut:M`, `eguchi_hanson:A`, `gh_taub_nut:M`, `gh_eguchi_hanson:A`.
pub fn parse_model(s: &str) -> anyhow::Result<MetricModel> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a.parse::<f64>().with_context(|| format!("bad parameter in `{s}`"))?)),
        None => (s, None),
    };
    let need = |what: &str| arg.with_context(|| format!("`{name}` needs a parameter, e.g. {name}:1.0 ({what})"));
    let model = match name.replace('-', "_").as_str() {
        "flat4" | "flat" => MetricModel::Flat4,
        "cp2" => MetricModel::Cp2,
        "half_plane" => MetricModel::HalfPlane,
        "taub_nut" => MetricModel::TaubNut { m: need("m")? },
        "eguchi_hanson" => MetricModel::EguchiHanson { alpha: need("α")? },
        "gh_taub_nut" => MetricModel::GibbonsHawking(GhData::taub_nut(need("m")?)),
        "gh_eguchi_hanson" => MetricModel::GibbonsHawking(GhData::eguchi_hanson(need("α")?)),
        other => bail!("unknown model `{other}`"),
    };
    Ok(model)
}

/// Random points well inside the chart of `model`.
pub fn sample_points(model: &MetricModel, n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let polar = |r: &mut ChaCha8Rng, lo: f64, hi: f64| {
        [r.random_range(lo..hi), r.random_range(0.4..PI - 0.4), r.random_range(0.0..TAU), r.random_range(0.0..TAU)]
    };
    (0..n)
        .map(|_| match model {
            MetricModel::TaubNut { .. } => polar(&mut r, 0.5, 4.0),
            MetricModel::EguchiHanson { alpha } => polar(&mut r, 1.2 * alpha, 4.0 * alpha),
            MetricModel::Cp2 => polar(&mut r, 0.3, 3.0),
            _ => loop {
                let p: [f64; 4] = std::array::from_fn(|_| r.random_range(-2.0..2.0));
                if p[0].hypot(p[1]) > 0.3 {
                    break p;
                }
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_models() {
        assert_eq!(parse_model("taub_nut:1.5").unwrap(), MetricModel::TaubNut { m: 1.5 });
        assert_eq!(parse_model("cp2").unwrap(), MetricModel::Cp2);
        assert!(parse_model("eguchi_hanson").is_err());
        assert!(parse_model("sphere").is_err());
    }
}
