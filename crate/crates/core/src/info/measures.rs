use super::law::{GpLaw, JointTable, Var, WzLaw};

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum()
}

pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

fn joint_entropy(t: &JointTable, vars: &[Var]) -> f64 {
    entropy(&t.marginal(vars))
}

/// `H(target | condition)` from a joint table.
pub fn conditional_entropy(t: &JointTable, target: Var, condition: Var) -> f64 {
    (joint_entropy(t, &[target, condition]) - joint_entropy(t, &[condition])).max(0.0)
}

pub fn mutual_information(t: &JointTable, a: Var, b: Var) -> f64 {
    (joint_entropy(t, &[a]) - conditional_entropy(t, a, b)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoMeasures {
    pub h_u: f64,
    pub h_u_given_s: f64,
    pub h_u_given_y: f64,
    pub h_u_given_x: f64,
    pub i_uy: f64,
    pub i_us: f64,
    pub i_ux: f64,
}

impl InfoMeasures {
    /// `H(U|S) - H(U|Y)`.
    pub fn gp_functional(&self) -> f64 {
        self.h_u_given_s - self.h_u_given_y
    }

    /// `H(U|Y) - H(U|X)`.
    pub fn wz_functional(&self) -> f64 {
        self.h_u_given_y - self.h_u_given_x
    }
}

/// All conditional entropies are computed as `H(U) - I(U;V)` so the chain
/// identities hold up to rounding of a single subtraction.
pub fn info_measures(t: &JointTable) -> InfoMeasures {
    let h_u = joint_entropy(t, &[Var::U]);
    let i_us = mutual_information(t, Var::U, Var::S);
    let i_uy = mutual_information(t, Var::U, Var::Y);
    let i_ux = mutual_information(t, Var::U, Var::X);
    InfoMeasures {
        h_u,
        h_u_given_s: h_u - i_us,
        h_u_given_y: h_u - i_uy,
        h_u_given_x: h_u - i_ux,
        i_uy,
        i_us,
        i_ux,
    }
}

/// `I(U;Y) - I(U;S)`.
pub fn gp_objective(law: &GpLaw) -> f64 {
    let m = info_measures(&law.joint());
    m.i_uy - m.i_us
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzObjective {
    pub rate: f64,
    pub distortion: f64,
}

/// `(I(U;X) - I(U;Y), E rho(X, f(U, Y)))`.
pub fn wz_objective(law: &WzLaw) -> WzObjective {
    let t = law.joint();
    let m = info_measures(&t);
    let distortion = t
        .cells()
        .map(|([u, _, x, y], p)| p * law.source.distortion[x][law.reconstruct(u, y)])
        .sum();
    WzObjective {
        rate: m.i_ux - m.i_uy,
        distortion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::law::{ConditionalLaw, GpChannel, WzSource};
    use proptest::prelude::*;

    fn clean_gp(aux: ConditionalLaw, map: Vec<Vec<usize>>) -> GpLaw {
        // Y = X, state irrelevant
        let transition = (0..2)
            .map(|x| {
                (0..2)
                    .map(|_| if x == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
                    .collect()
            })
            .collect();
        let ch = GpChannel::new(vec![0.5, 0.5], transition).unwrap();
        GpLaw::new(ch, aux, map).unwrap()
    }

    #[test]
    fn clean_channel_gives_one_bit() {
        let aux = ConditionalLaw::new(vec![vec![0.5, 0.5]; 2]).unwrap();
        let law = clean_gp(aux, vec![vec![0, 0], vec![1, 1]]);
        let m = info_measures(&law.joint());
        assert!((m.h_u_given_s - 1.0).abs() < 1e-12);
        assert!(m.h_u_given_y.abs() < 1e-12);
        assert!((gp_objective(&law) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bsc_functional_is_one_minus_binary_entropy() {
        let law = GpLaw::new(
            GpChannel::binary_additive(0.0, 0.11).unwrap(),
            ConditionalLaw::new(vec![vec![0.5, 0.5]; 2]).unwrap(),
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap();
        let m = info_measures(&law.joint());
        let h = -0.11 * 0.11f64.log2() - 0.89 * 0.89f64.log2();
        assert!((m.h_u_given_y - h).abs() < 1e-12);
        assert!((m.gp_functional() - 0.5).abs() < 0.001);
    }

    #[test]
    fn constant_aux_has_zero_measures() {
        let aux = ConditionalLaw::new(vec![vec![1.0, 0.0]; 2]).unwrap();
        let law = clean_gp(aux, vec![vec![0, 1], vec![1, 0]]);
        let m = info_measures(&law.joint());
        for v in [m.h_u_given_s, m.h_u_given_y, m.h_u_given_x, m.i_uy, m.i_us, m.i_ux] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn wz_lossless_corner() {
        let src = WzSource::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]], None).unwrap();
        let law = WzLaw::new(src, ConditionalLaw::identity(2), vec![vec![0, 0], vec![1, 1]]).unwrap();
        let o = wz_objective(&law);
        assert!(o.rate.abs() < 1e-12);
        assert!(o.distortion.abs() < 1e-12);
    }

    #[test]
    fn doubly_symmetric_wz_matches_closed_form() {
        let law = WzLaw::new(
            WzSource::doubly_symmetric(0.25).unwrap(),
            ConditionalLaw::binary_symmetric(0.1).unwrap(),
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap()
        .with_bayes_map();
        let o = wz_objective(&law);
        // U|X flips w.p. 0.1, U|Y flips w.p. 0.1*0.75 + 0.9*0.25 = 0.3
        let rate = binary_entropy(0.3) - binary_entropy(0.1);
        assert!((o.rate - rate).abs() < 1e-12);
        // ML estimate from (u, y) is u whenever they disagree only w.p. 0.3
        assert!((o.distortion - 0.1).abs() < 1e-12);
    }

    fn row(a: f64) -> Vec<f64> {
        vec![a, 1.0 - a]
    }

    proptest! {
        #[test]
        fn chain_identities_hold(
            a in 0.0f64..1.0, b in 0.0f64..1.0, q in 0.0f64..1.0, flip in 0.0f64..0.5,
            m in 0usize..16,
        ) {
            let map = vec![vec![m & 1, (m >> 1) & 1], vec![(m >> 2) & 1, (m >> 3) & 1]];
            let law = GpLaw::new(
                GpChannel::binary_additive(q, flip).unwrap(),
                ConditionalLaw::new(vec![row(a), row(b)]).unwrap(),
                map,
            ).unwrap();
            let mm = info_measures(&law.joint());
            prop_assert!((mm.gp_functional() - (mm.i_uy - mm.i_us)).abs() < 1e-10);
            prop_assert!((mm.wz_functional() - (mm.i_ux - mm.i_uy)).abs() < 1e-10);
            for v in [mm.h_u, mm.h_u_given_s, mm.h_u_given_y, mm.h_u_given_x, mm.i_uy, mm.i_us, mm.i_ux] {
                prop_assert!(v >= 0.0);
            }
        }
    }
}
