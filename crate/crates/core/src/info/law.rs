use rand::Rng;

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Row-stochastic table `p(target | condition)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    rows: Vec<Vec<f64>>,
    outputs: usize,
}

impl ConditionalLaw {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let outputs = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || outputs == 0 {
            return Err(Error::InvalidLaw("conditional table is empty".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::InvalidLaw(format!(
                    "row {i} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            check_pmf(row, &format!("row {i}"))?;
        }
        Ok(ConditionalLaw { rows, outputs })
    }

    /// `target = condition` with probability one.
    pub fn identity(size: usize) -> Self {
        let rows = (0..size)
            .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        ConditionalLaw { rows, outputs: size }
    }

    /// Binary symmetric: flip with probability `p`.
    pub fn binary_symmetric(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn prob(&self, condition: usize, target: usize) -> f64 {
        self.rows[condition][target]
    }

    pub fn row(&self, condition: usize) -> &[f64] {
        &self.rows[condition]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, condition: usize) -> usize {
        sample_pmf(rng, &self.rows[condition])
    }
}

pub(crate) fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidLaw(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidLaw(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

pub fn sample_pmf<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let mut u: f64 = rng.random();
    for (i, &w) in p.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding slack lands on the last positive entry
    p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// State-dependent channel `p(y | x, s)` with i.i.d. state `p(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpChannel {
    pub state: Vec<f64>,
    /// Indexed `[x][s][y]`.
    pub transition: Vec<Vec<Vec<f64>>>,
}

impl GpChannel {
    pub fn new(state: Vec<f64>, transition: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        check_pmf(&state, "state distribution")?;
        let ns = state.len();
        let ny = transition.first().and_then(|r| r.first()).map(Vec::len).unwrap_or(0);
        if transition.is_empty() || ny == 0 {
            return Err(Error::InvalidLaw("channel table is empty".into()));
        }
        for (x, rows) in transition.iter().enumerate() {
            if rows.len() != ns {
                return Err(Error::InvalidLaw(format!(
                    "input {x}: {} state rows, expected {ns}",
                    rows.len()
                )));
            }
            for (s, row) in rows.iter().enumerate() {
                if row.len() != ny {
                    return Err(Error::InvalidLaw(format!("input {x}, state {s}: wrong output count")));
                }
                check_pmf(row, &format!("channel row (x={x}, s={s})"))?;
            }
        }
        Ok(GpChannel { state, transition })
    }

    /// `Y = X xor S xor Z`, `Z ~ Bern(flip)`, `S ~ Bern(state_one)`.
    pub fn binary_additive(state_one: f64, flip: f64) -> Result<Self> {
        let transition = (0..2)
            .map(|x| {
                (0..2)
                    .map(|s| {
                        let clean = x ^ s;
                        let mut row = vec![flip, flip];
                        row[clean] = 1.0 - flip;
                        row
                    })
                    .collect()
            })
            .collect();
        Self::new(vec![1.0 - state_one, state_one], transition)
    }

    pub fn num_states(&self) -> usize {
        self.state.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.transition[0][0].len()
    }

    pub fn sample_output<R: Rng + ?Sized>(&self, rng: &mut R, x: usize, s: usize) -> usize {
        sample_pmf(rng, &self.transition[x][s])
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_pmf(rng, &self.state)
    }
}

/// Channel plus auxiliary `p(u | s)` and input map `x = f(u, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpLaw {
    pub channel: GpChannel,
    pub aux: ConditionalLaw,
    /// Indexed `[u][s]`.
    pub map: Vec<Vec<usize>>,
}

impl GpLaw {
    pub fn new(channel: GpChannel, aux: ConditionalLaw, map: Vec<Vec<usize>>) -> Result<Self> {
        if aux.inputs() != channel.num_states() {
            return Err(Error::InvalidLaw("auxiliary table must have one row per state".into()));
        }
        if map.len() != aux.outputs() || map.iter().any(|r| r.len() != channel.num_states()) {
            return Err(Error::InvalidLaw("map must be |U| x |S|".into()));
        }
        if map.iter().flatten().any(|&x| x >= channel.num_inputs()) {
            return Err(Error::InvalidLaw("map produces an out-of-range input symbol".into()));
        }
        Ok(GpLaw { channel, aux, map })
    }

    pub fn num_aux(&self) -> usize {
        self.aux.outputs()
    }

    pub fn input(&self, u: usize, s: usize) -> usize {
        self.map[u][s]
    }

    /// `p(u | s)`, the law the transmitter inverts against.
    pub fn u_given_s(&self) -> ConditionalLaw {
        self.aux.clone()
    }

    /// `p(u | y)`, the law the receiver decodes against.
    pub fn u_given_y(&self) -> ConditionalLaw {
        let t = self.joint();
        t.conditional(Var::U, Var::Y)
    }

    pub fn joint(&self) -> JointTable {
        let ch = &self.channel;
        let (nu, ns, nx, ny) = (self.num_aux(), ch.num_states(), ch.num_inputs(), ch.num_outputs());
        let mut t = JointTable::zeros([nu, ns, nx, ny]);
        for s in 0..ns {
            for u in 0..nu {
                let x = self.map[u][s];
                let w = ch.state[s] * self.aux.prob(s, u);
                for y in 0..ny {
                    *t.at_mut(u, s, x, y) += w * ch.transition[x][s][y];
                }
            }
        }
        t
    }
}

/// Source pair `p(x, y)` and a distortion table `rho[x][xhat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WzSource {
    /// Indexed `[x][y]`.
    pub joint: Vec<Vec<f64>>,
    pub distortion: Vec<Vec<f64>>,
}

impl WzSource {
    pub fn new(joint: Vec<Vec<f64>>, distortion: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let nx = joint.len();
        let ny = joint.first().map(Vec::len).unwrap_or(0);
        if nx == 0 || ny == 0 || joint.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidLaw(
                "source table must be a non-empty |X| x |Y| matrix".into(),
            ));
        }
        let flat: Vec<f64> = joint.iter().flatten().copied().collect();
        check_pmf(&flat, "source joint")?;
        let distortion = distortion.unwrap_or_else(|| hamming(nx));
        if distortion.len() != nx
            || distortion
                .iter()
                .any(|r| r.is_empty() || r.len() != distortion[0].len())
        {
            return Err(Error::InvalidLaw("distortion table must be |X| x |Xhat|".into()));
        }
        if distortion.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidLaw("distortion entries must be finite and >= 0".into()));
        }
        Ok(WzSource { joint, distortion })
    }

    /// `X ~ Bern(1/2)`, `Y = X xor Bern(flip)`, Hamming distortion.
    pub fn doubly_symmetric(flip: f64) -> Result<Self> {
        Self::new(
            vec![
                vec![(1.0 - flip) / 2.0, flip / 2.0],
                vec![flip / 2.0, (1.0 - flip) / 2.0],
            ],
            None,
        )
    }

    pub fn num_source(&self) -> usize {
        self.joint.len()
    }

    pub fn num_side(&self) -> usize {
        self.joint[0].len()
    }

    pub fn num_reconstruction(&self) -> usize {
        self.distortion[0].len()
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let ny = self.num_side();
        let flat: Vec<f64> = self.joint.iter().flatten().copied().collect();
        let k = sample_pmf(rng, &flat);
        (k / ny, k % ny)
    }
}

pub fn hamming(size: usize) -> Vec<Vec<f64>> {
    (0..size)
        .map(|i| (0..size).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// Source plus test channel `p(u | x)` and reconstruction `xhat = f(u, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WzLaw {
    pub source: WzSource,
    pub aux: ConditionalLaw,
    /// Indexed `[u][y]`.
    pub map: Vec<Vec<usize>>,
}

impl WzLaw {
    pub fn new(source: WzSource, aux: ConditionalLaw, map: Vec<Vec<usize>>) -> Result<Self> {
        if aux.inputs() != source.num_source() {
            return Err(Error::InvalidLaw(
                "test channel must have one row per source symbol".into(),
            ));
        }
        if map.len() != aux.outputs() || map.iter().any(|r| r.len() != source.num_side()) {
            return Err(Error::InvalidLaw("map must be |U| x |Y|".into()));
        }
        if map.iter().flatten().any(|&v| v >= source.num_reconstruction()) {
            return Err(Error::InvalidLaw("map produces an out-of-range reconstruction".into()));
        }
        Ok(WzLaw { source, aux, map })
    }

    /// Replace the map with the per-cell minimum expected distortion choice.
    pub fn with_bayes_map(mut self) -> Self {
        let (nx, ny, nu) = (self.source.num_source(), self.source.num_side(), self.aux.outputs());
        let nh = self.source.num_reconstruction();
        self.map = (0..nu)
            .map(|u| {
                (0..ny)
                    .map(|y| {
                        let cost = |h: usize| -> f64 {
                            (0..nx)
                                .map(|x| self.source.joint[x][y] * self.aux.prob(x, u) * self.source.distortion[x][h])
                                .sum()
                        };
                        (0..nh).min_by(|&a, &b| cost(a).partial_cmp(&cost(b)).unwrap()).unwrap()
                    })
                    .collect()
            })
            .collect();
        self
    }

    pub fn num_aux(&self) -> usize {
        self.aux.outputs()
    }

    pub fn reconstruct(&self, u: usize, y: usize) -> usize {
        self.map[u][y]
    }

    pub fn u_given_x(&self) -> ConditionalLaw {
        self.aux.clone()
    }

    pub fn u_given_y(&self) -> ConditionalLaw {
        self.joint().conditional(Var::U, Var::Y)
    }

    /// Joint table with a trivial state variable.
    pub fn joint(&self) -> JointTable {
        let (nx, ny, nu) = (self.source.num_source(), self.source.num_side(), self.num_aux());
        let mut t = JointTable::zeros([nu, 1, nx, ny]);
        for x in 0..nx {
            for y in 0..ny {
                for u in 0..nu {
                    *t.at_mut(u, 0, x, y) = self.source.joint[x][y] * self.aux.prob(x, u);
                }
            }
        }
        t
    }
}

/// Either law, for code that handles both problems.
#[derive(Debug, Clone, PartialEq)]
pub enum JointLaw {
    Gp(GpLaw),
    Wz(WzLaw),
}

impl JointLaw {
    pub fn joint(&self) -> JointTable {
        match self {
            JointLaw::Gp(l) => l.joint(),
            JointLaw::Wz(l) => l.joint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    U = 0,
    S = 1,
    X = 2,
    Y = 3,
}

/// Joint probability table over `(U, S, X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    dims: [usize; 4],
    p: Vec<f64>,
}

impl JointTable {
    pub fn zeros(dims: [usize; 4]) -> Self {
        JointTable {
            dims,
            p: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    fn offset(&self, u: usize, s: usize, x: usize, y: usize) -> usize {
        let [_, ns, nx, ny] = self.dims;
        ((u * ns + s) * nx + x) * ny + y
    }

    pub fn at(&self, u: usize, s: usize, x: usize, y: usize) -> f64 {
        self.p[self.offset(u, s, x, y)]
    }

    pub fn at_mut(&mut self, u: usize, s: usize, x: usize, y: usize) -> &mut f64 {
        let o = self.offset(u, s, x, y);
        &mut self.p[o]
    }

    /// Visit every cell as `([u, s, x, y], p)`.
    pub fn cells(&self) -> impl Iterator<Item = ([usize; 4], f64)> + '_ {
        let [_, ns, nx, ny] = self.dims;
        self.p.iter().enumerate().map(move |(k, &p)| {
            let y = k % ny;
            let x = (k / ny) % nx;
            let s = (k / (ny * nx)) % ns;
            let u = k / (ny * nx * ns);
            ([u, s, x, y], p)
        })
    }

    /// Marginal over the listed variables, flattened in listed order.
    pub fn marginal(&self, vars: &[Var]) -> Vec<f64> {
        let size: usize = vars.iter().map(|&v| self.dims[v as usize]).product();
        let mut out = vec![0.0; size];
        for (idx, p) in self.cells() {
            let mut k = 0;
            for &v in vars {
                k = k * self.dims[v as usize] + idx[v as usize];
            }
            out[k] += p;
        }
        out
    }

    /// `p(target | condition)`; rows of zero-probability conditions are
    /// uniform.
    pub fn conditional(&self, target: Var, condition: Var) -> ConditionalLaw {
        let nt = self.dims[target as usize];
        let nc = self.dims[condition as usize];
        let pair = self.marginal(&[condition, target]);
        let rows = (0..nc)
            .map(|c| {
                let row = &pair[c * nt..(c + 1) * nt];
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    row.iter().map(|v| v / total).collect()
                } else {
                    vec![1.0 / nt as f64; nt]
                }
            })
            .collect();
        ConditionalLaw { rows, outputs: nt }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rows() {
        assert!(ConditionalLaw::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(ConditionalLaw::new(vec![vec![1.2, -0.2]]).is_err());
        assert!(ConditionalLaw::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(ConditionalLaw::new(vec![]).is_err());
    }

    #[test]
    fn gp_joint_sums_to_one_and_respects_map() {
        let ch = GpChannel::binary_additive(0.5, 0.1).unwrap();
        let aux = ConditionalLaw::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let law = GpLaw::new(ch, aux, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let t = law.joint();
        let total: f64 = t.cells().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for ([u, s, x, _], p) in t.cells() {
            if x != law.input(u, s) {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn bayes_map_for_symmetric_instance_is_identity_on_u() {
        let src = WzSource::doubly_symmetric(0.25).unwrap();
        let law = WzLaw::new(src, ConditionalLaw::binary_symmetric(0.1).unwrap(), vec![vec![0, 0]; 2])
            .unwrap()
            .with_bayes_map();
        assert_eq!(law.map, vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn u_given_y_for_cascaded_flips() {
        let src = WzSource::doubly_symmetric(0.25).unwrap();
        let law = WzLaw::new(
            src,
            ConditionalLaw::binary_symmetric(0.1).unwrap(),
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap();
        let c = law.u_given_y();
        // 0.1 * 0.75 + 0.9 * 0.25
        assert!((c.prob(0, 1) - 0.3).abs() < 1e-12);
    }
}
