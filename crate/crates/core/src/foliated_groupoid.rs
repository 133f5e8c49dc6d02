//! Crossed-product groupoid `G = H_B ⋊ ℝ` of a codimension-one foliation with
//! a transverse flow, reduced to a complete transversal `B`.
//!
//! Transversal coordinates are flow parameters: on every component the flow
//! acts by `b ↦ b + t` (periodic or infinite orbits) or fixes a point. Holonomy
//! arrows are presented by translation sheets `(range, source, shift)` with
//! `r(γ) = b` and `s(γ) = b - shift`, so the Lebesgue measure is invariant.
//!
//! Functions are sampled on a uniform grid in `(b, t)` with one common step
//! `h`. All integrals over `b` and `t` are trapezoid sums, which are spectrally
//! accurate for smooth compactly supported data and make the discrete algebra
//! exactly associative and its traces exactly tracial up to rounding.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use crate::linalg::{composite_gauss, CMat};
use crate::{cis_tau, Error, Result, C64, TAU};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComponentKind {
    /// Circle of flow-period `period`.
    Periodic { period: f64 },
    /// Segment `[0, length]` of an infinite orbit.
    Infinite { length: f64 },
    /// Fixed point of the flow with exponent `kappa`.
    Fixed { kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransversalComponent {
    pub kind: ComponentKind,
    /// Coordinate of the first grid point.
    pub base: f64,
}

impl TransversalComponent {
    pub fn periodic(period: f64) -> Self {
        TransversalComponent { kind: ComponentKind::Periodic { period }, base: 0.0 }
    }

    pub fn infinite(length: f64) -> Self {
        TransversalComponent { kind: ComponentKind::Infinite { length }, base: 0.0 }
    }

    pub fn fixed(kappa: f64) -> Self {
        TransversalComponent { kind: ComponentKind::Fixed { kappa }, base: 0.0 }
    }
}

/// Local bisection `b ↦ b - shift` from component `range` to component `source`.
/// The shift is an integer number of grid steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sheet {
    pub range: usize,
    pub source: usize,
    pub shift: i64,
}

impl Sheet {
    pub fn is_unit(&self) -> bool {
        self.range == self.source && self.shift == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyPresentation {
    components: Vec<TransversalComponent>,
    points: Vec<usize>,
    sheets: Vec<Sheet>,
    step: f64,
    max_word: usize,
}

fn grid_count(len: f64, step: f64) -> Result<usize> {
    let n = len / step;
    let r = libm::round(n);
    if !(len > 0.0) || r < 1.0 || (n - r).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Invalid(format!("length {len} is not a positive multiple of the step {step}")));
    }
    Ok(r as usize)
}

impl HolonomyPresentation {
    /// Closes `generators` (plus units and inverses) under composition. Words
    /// longer than `max_word` are rejected.
    pub fn new(components: Vec<TransversalComponent>, step: f64, generators: &[Sheet], max_word: usize) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Invalid(format!("grid step {step} must be positive")));
        }
        let mut points = Vec::with_capacity(components.len());
        for c in &components {
            points.push(match c.kind {
                ComponentKind::Periodic { period } => grid_count(period, step)?,
                ComponentKind::Infinite { length } => grid_count(length, step)? + 1,
                ComponentKind::Fixed { kappa } => {
                    if kappa == 0.0 || !kappa.is_finite() {
                        return Err(Error::ZeroExpansionRate(kappa));
                    }
                    1
                }
            });
        }
        let mut p = HolonomyPresentation { components, points, sheets: Vec::new(), step, max_word };
        for c in 0..p.components.len() {
            p.sheets.push(Sheet { range: c, source: c, shift: 0 });
        }
        let mut gens = Vec::new();
        for g in generators {
            let g = p.normalize(*g)?;
            let inv = p.normalize(Sheet { range: g.source, source: g.range, shift: -g.shift })?;
            for s in [g, inv] {
                if !gens.contains(&s) {
                    gens.push(s);
                }
                if !p.sheets.contains(&s) {
                    p.sheets.push(s);
                }
            }
        }
        let mut frontier: Vec<Sheet> = gens.clone();
        let mut word = 1;
        while !frontier.is_empty() {
            word += 1;
            let mut next = Vec::new();
            for a in &frontier {
                for g in &gens {
                    if a.source != g.range {
                        continue;
                    }
                    let c = p.normalize(Sheet { range: a.range, source: g.source, shift: a.shift + g.shift })?;
                    if !p.sheets.contains(&c) {
                        p.sheets.push(c);
                        next.push(c);
                    }
                }
            }
            if !next.is_empty() && word > max_word {
                return Err(Error::WordLengthOverflow(max_word));
            }
            frontier = next;
        }
        Ok(p)
    }

    /// Single periodic transversal with trivial holonomy.
    pub fn product(period: f64, points: usize) -> Result<Self> {
        HolonomyPresentation::new(alloc::vec![TransversalComponent::periodic(period)], period / points as f64, &[], 8)
    }

    fn normalize(&self, s: Sheet) -> Result<Sheet> {
        let n = self.components.len();
        if s.range >= n || s.source >= n {
            return Err(Error::Invalid(format!("sheet {s:?} references a missing component")));
        }
        let (kr, ks) = (self.components[s.range].kind, self.components[s.source].kind);
        match (kr, ks) {
            (ComponentKind::Fixed { .. }, _) | (_, ComponentKind::Fixed { .. }) => {
                if !s.is_unit() {
                    return Err(Error::Invalid("fixed points carry only unit arrows".into()));
                }
                Ok(s)
            }
            (ComponentKind::Periodic { .. }, ComponentKind::Periodic { .. }) => {
                if self.points[s.range] != self.points[s.source] {
                    return Err(Error::Invalid("sheet joins periodic components of different periods".into()));
                }
                Ok(Sheet { shift: s.shift.rem_euclid(self.points[s.source] as i64), ..s })
            }
            (ComponentKind::Infinite { .. }, ComponentKind::Infinite { .. }) => Ok(s),
            _ => Err(Error::Invalid("sheet joins a periodic and an infinite component".into())),
        }
    }

    pub fn components(&self) -> &[TransversalComponent] {
        &self.components
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn max_word(&self) -> usize {
        self.max_word
    }

    /// Number of grid points on component `c`.
    pub fn points(&self, c: usize) -> usize {
        self.points[c]
    }

    /// Index of the unit sheet of component `c`.
    pub fn unit(&self, c: usize) -> usize {
        c
    }

    pub fn sheet_index(&self, s: Sheet) -> Option<usize> {
        let s = self.normalize(s).ok()?;
        self.sheets.iter().position(|&x| x == s)
    }

    /// Sheet of `γδ` for `γ` on sheet `a` and `δ` on sheet `b`.
    pub fn compose(&self, a: usize, b: usize) -> Option<usize> {
        let (sa, sb) = (self.sheets[a], self.sheets[b]);
        if sa.source != sb.range {
            return None;
        }
        self.sheet_index(Sheet { range: sa.range, source: sb.source, shift: sa.shift + sb.shift })
    }

    pub fn inverse(&self, a: usize) -> usize {
        let s = self.sheets[a];
        self.sheet_index(Sheet { range: s.source, source: s.range, shift: -s.shift }).expect("closed under inverses")
    }

    pub fn has_fixed_points(&self) -> bool {
        self.components.iter().any(|c| matches!(c.kind, ComponentKind::Fixed { .. }))
    }

    /// Grid index reached from index `i` on component `c` after `steps` steps
    /// of the flow.
    fn flow_index(&self, c: usize, i: i64, steps: i64) -> Option<usize> {
        let n = self.points[c] as i64;
        match self.components[c].kind {
            ComponentKind::Periodic { .. } => Some((i + steps).rem_euclid(n) as usize),
            ComponentKind::Infinite { .. } => {
                let j = i + steps;
                (0..n).contains(&j).then_some(j as usize)
            }
            ComponentKind::Fixed { .. } => Some(0),
        }
    }

    /// Largest change of `∫ρ db` when a density `ρ(component, b)` on the source
    /// is pulled back along a sheet, with trapezoid sums on both grids.
    pub fn holonomy_defect(&self, density: impl Fn(usize, f64) -> f64) -> f64 {
        let h = self.step;
        let mut worst = 0.0f64;
        for s in &self.sheets {
            if matches!(self.components[s.range].kind, ComponentKind::Fixed { .. }) {
                continue;
            }
            let n = self.points[s.range] as i64;
            let (br, bs) = (self.components[s.range].base, self.components[s.source].base);
            let mut pulled = 0.0;
            let mut direct = 0.0;
            for i in 0..n {
                let Some(j) = self.flow_index(s.source, i - s.shift, 0) else { continue };
                pulled += density(s.source, br + (i - s.shift) as f64 * h - br + bs);
                direct += density(s.source, bs + j as f64 * h);
            }
            worst = worst.max(((pulled - direct) * h).abs());
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportFlag {
    /// Compactly supported in `t ∈ ℝ`.
    Full,
    /// Vanishes for `t ≤ 0`: an element of `C_c^∞(G₊*)`.
    Positive,
}

/// Samples of one sheet: `values[i * n_t + (k - t_start)] = f(b_i, k h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetData {
    pub t_start: i64,
    pub n_t: usize,
    pub values: Vec<C64>,
}

impl SheetData {
    fn at(&self, i: usize, k: i64) -> C64 {
        let d = k - self.t_start;
        if d < 0 || d >= self.n_t as i64 {
            return ZERO;
        }
        self.values[i * self.n_t + d as usize]
    }

    fn t_range(&self) -> core::ops::Range<i64> {
        self.t_start..self.t_start + self.n_t as i64
    }
}

/// Element of `C_c^∞(G)` sampled sheetwise.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupoidFunction {
    pres: Arc<HolonomyPresentation>,
    flag: SupportFlag,
    data: Vec<Option<SheetData>>,
}

/// Contributions of the three kinds of transversal components to the trace.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraceParts {
    pub periodic: C64,
    pub infinite: C64,
    pub fixed: C64,
}

impl TraceParts {
    pub fn total(&self) -> C64 {
        self.periodic + self.infinite + self.fixed
    }
}

/// Operator of `f` on `L²(B)`: a matrix on the grid of the non-fixed
/// components plus a multiple of the Dirac mass at each fixed point.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    /// Grid operator including the quadrature weight `h`.
    pub matrix: CMat,
    /// First row of each component in `matrix` (`None` for fixed points).
    pub offsets: Vec<Option<usize>>,
    pub dirac: Vec<DiracPart>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracPart {
    pub component: usize,
    /// `∫ f(b*, t) dt`: action on functions at the fixed point.
    pub weight: C64,
    /// `∫ f(b*, t) / |1 - e^{κt}| dt`: contribution to the trace.
    pub trace_weight: C64,
}

impl GroupoidFunction {
    pub fn zero(pres: Arc<HolonomyPresentation>, flag: SupportFlag) -> Self {
        let n = pres.sheets.len();
        GroupoidFunction { pres, flag, data: vec![None; n] }
    }

    pub fn presentation(&self) -> &Arc<HolonomyPresentation> {
        &self.pres
    }

    pub fn flag(&self) -> SupportFlag {
        self.flag
    }

    pub fn sheet(&self, s: usize) -> Option<&SheetData> {
        self.data[s].as_ref()
    }

    /// Samples `f(b, t)` on sheet `s` for grid times in `[t_lo, t_hi]`.
    pub fn with_sheet(mut self, s: usize, t_lo: f64, t_hi: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let h = self.pres.step;
        let k0 = libm::ceil(t_lo / h - 1e-9) as i64;
        let k1 = libm::floor(t_hi / h + 1e-9) as i64;
        if k1 < k0 {
            return Err(Error::Invalid(format!("empty time window [{t_lo}, {t_hi}]")));
        }
        if self.flag == SupportFlag::Positive && k0 <= 0 {
            return Err(Error::SupportTouchesZero);
        }
        let sheet = *self.pres.sheets.get(s).ok_or_else(|| Error::Invalid(format!("no sheet {s}")))?;
        let comp = self.pres.components[sheet.range];
        let nb = self.pres.points[sheet.range];
        let n_t = (k1 - k0 + 1) as usize;
        let mut values = Vec::with_capacity(nb * n_t);
        for i in 0..nb {
            let b = comp.base + i as f64 * h;
            for k in k0..=k1 {
                values.push(f(b, k as f64 * h));
            }
        }
        self.data[s] = Some(SheetData { t_start: k0, n_t, values });
        Ok(self)
    }

    /// Unit-sheet function on component `c`.
    pub fn on_units(self, c: usize, t_lo: f64, t_hi: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let u = self.pres.unit(c);
        self.with_sheet(u, t_lo, t_hi, f)
    }

    /// Grid value at `(b_i, k h)` on sheet `s`.
    pub fn value(&self, s: usize, i: usize, k: i64) -> C64 {
        self.data[s].as_ref().map_or(ZERO, |d| d.at(i, k))
    }

    fn check_compatible(&self, other: &GroupoidFunction) -> Result<()> {
        if Arc::ptr_eq(&self.pres, &other.pres) || *self.pres == *other.pres {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("functions live on different presentations".into()))
        }
    }

    fn combine(&self, other: &GroupoidFunction, sa: C64, sb: C64) -> Result<GroupoidFunction> {
        self.check_compatible(other)?;
        let flag = if self.flag == SupportFlag::Positive && other.flag == SupportFlag::Positive {
            SupportFlag::Positive
        } else {
            SupportFlag::Full
        };
        let mut out = GroupoidFunction::zero(self.pres.clone(), flag);
        for s in 0..self.data.len() {
            let (a, b) = (&self.data[s], &other.data[s]);
            let (lo, hi) = match (a, b) {
                (None, None) => continue,
                (Some(a), None) => (a.t_start, a.t_range().end),
                (None, Some(b)) => (b.t_start, b.t_range().end),
                (Some(a), Some(b)) => (a.t_start.min(b.t_start), a.t_range().end.max(b.t_range().end)),
            };
            let nb = self.pres.points[self.pres.sheets[s].range];
            let n_t = (hi - lo) as usize;
            let mut values = Vec::with_capacity(nb * n_t);
            for i in 0..nb {
                for k in lo..hi {
                    let va = a.as_ref().map_or(ZERO, |d| d.at(i, k));
                    let vb = b.as_ref().map_or(ZERO, |d| d.at(i, k));
                    values.push(va * sa + vb * sb);
                }
            }
            out.data[s] = Some(SheetData { t_start: lo, n_t, values });
        }
        Ok(out)
    }

    pub fn add(&self, other: &GroupoidFunction) -> Result<GroupoidFunction> {
        self.combine(other, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &GroupoidFunction) -> Result<GroupoidFunction> {
        self.combine(other, C64::new(1.0, 0.0), C64::new(-1.0, 0.0))
    }

    /// `sa·self + sb·other`.
    pub fn linear_combination(&self, sa: C64, other: &GroupoidFunction, sb: C64) -> Result<GroupoidFunction> {
        self.combine(other, sa, sb)
    }

    pub fn scale(&self, s: C64) -> GroupoidFunction {
        let mut out = self.clone();
        for d in out.data.iter_mut().flatten() {
            for v in &mut d.values {
                *v *= s;
            }
        }
        out
    }

    /// Multiplies every sample by `w(t)`.
    pub fn map_time(&self, w: impl Fn(f64) -> f64) -> GroupoidFunction {
        let h = self.pres.step;
        let mut out = self.clone();
        for d in out.data.iter_mut().flatten() {
            let nb = d.values.len() / d.n_t.max(1);
            for i in 0..nb {
                for m in 0..d.n_t {
                    d.values[i * d.n_t + m] *= w((d.t_start + m as i64) as f64 * h);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().flat_map(|d| d.values.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `Σ_sheets ∫∫ |f| db dt` (the point measure is used on fixed points).
    pub fn l1_norm(&self) -> f64 {
        let h = self.pres.step;
        let mut total = 0.0;
        for (s, d) in self.data.iter().enumerate() {
            let Some(d) = d else { continue };
            let c = self.pres.sheets[s].range;
            let wb = if matches!(self.pres.components[c].kind, ComponentKind::Fixed { .. }) { 1.0 } else { h };
            total += wb * h * d.values.iter().map(|z| z.norm()).sum::<f64>();
        }
        total
    }

    /// Drops time samples that are exactly zero on every grid point.
    pub fn trimmed(&self) -> GroupoidFunction {
        let mut out = self.clone();
        for d in out.data.iter_mut() {
            let Some(sd) = d.as_mut() else { continue };
            let nb = sd.values.len() / sd.n_t.max(1);
            let live = |m: usize| (0..nb).any(|i| sd.values[i * sd.n_t + m] != ZERO);
            let first = (0..sd.n_t).find(|&m| live(m));
            let Some(first) = first else {
                *d = None;
                continue;
            };
            let last = (0..sd.n_t).rev().find(|&m| live(m)).unwrap();
            let n_t = last - first + 1;
            let mut values = Vec::with_capacity(nb * n_t);
            for i in 0..nb {
                values.extend_from_slice(&sd.values[i * sd.n_t + first..i * sd.n_t + last + 1]);
            }
            *sd = SheetData { t_start: sd.t_start + first as i64, n_t, values };
        }
        out
    }

    /// `(f*g)(γ, T) = Σ_{γ₁γ₂=γ} ∫ f(γ₁, s) g(φ̄_{-s}(γ₂), T - s) ds`.
    pub fn convolve(&self, other: &GroupoidFunction) -> Result<GroupoidFunction> {
        self.check_compatible(other)?;
        let pres = &self.pres;
        let h = pres.step;
        let flag = if self.flag == SupportFlag::Positive && other.flag == SupportFlag::Positive {
            SupportFlag::Positive
        } else {
            SupportFlag::Full
        };
        let mut acc: Vec<Option<SheetData>> = vec![None; pres.sheets.len()];
        for (a, fa) in self.data.iter().enumerate() {
            let Some(fa) = fa else { continue };
            let sa = pres.sheets[a];
            for (b, gb) in other.data.iter().enumerate() {
                let Some(gb) = gb else { continue };
                let Some(c) = pres.compose(a, b) else { continue };
                let nb = pres.points[sa.range];
                let lo = fa.t_start + gb.t_start;
                let n_t = fa.n_t + gb.n_t - 1;
                let slot = acc[c].get_or_insert_with(|| SheetData { t_start: lo, n_t, values: vec![ZERO; nb * n_t] });
                if lo < slot.t_start || lo + n_t as i64 > slot.t_start + slot.n_t as i64 {
                    let new_lo = lo.min(slot.t_start);
                    let new_hi = (lo + n_t as i64).max(slot.t_start + slot.n_t as i64);
                    let nn = (new_hi - new_lo) as usize;
                    let mut values = vec![ZERO; nb * nn];
                    for i in 0..nb {
                        for m in 0..slot.n_t {
                            values[i * nn + (slot.t_start - new_lo) as usize + m] = slot.values[i * slot.n_t + m];
                        }
                    }
                    *slot = SheetData { t_start: new_lo, n_t: nn, values };
                }
                for i in 0..nb {
                    for (ms, &fv) in fa.values[i * fa.n_t..(i + 1) * fa.n_t].iter().enumerate() {
                        if fv == ZERO {
                            continue;
                        }
                        let s = fa.t_start + ms as i64;
                        let Some(j) = pres.flow_index(sa.source, i as i64 - sa.shift, s) else { continue };
                        let fv = fv * h;
                        let grow = &gb.values[j * gb.n_t..(j + 1) * gb.n_t];
                        let base = i * slot.n_t + (s + gb.t_start - slot.t_start) as usize;
                        for (o, &gv) in slot.values[base..base + gb.n_t].iter_mut().zip(grow) {
                            *o += fv * gv;
                        }
                    }
                }
            }
        }
        Ok(GroupoidFunction { pres: self.pres.clone(), flag, data: acc })
    }

    /// `f*(γ, t) = conj f((γ, t)^{-1})`.
    pub fn adjoint(&self) -> GroupoidFunction {
        let pres = &self.pres;
        let mut out = GroupoidFunction::zero(pres.clone(), SupportFlag::Full);
        for (s, d) in self.data.iter().enumerate() {
            let Some(d) = d else { continue };
            let tau = pres.inverse(s);
            let st = pres.sheets[tau];
            let nb = pres.points[st.range];
            let t_start = -(d.t_range().end - 1);
            let mut values = vec![ZERO; nb * d.n_t];
            for i in 0..nb {
                for m in 0..d.n_t {
                    let t = t_start + m as i64;
                    if let Some(j) = pres.flow_index(st.source, i as i64 - st.shift, t) {
                        values[i * d.n_t + m] = d.at(j, -t).conj();
                    }
                }
            }
            out.data[tau] = Some(SheetData { t_start, n_t: d.n_t, values });
        }
        out
    }

    fn fixed_term(&self) -> C64 {
        let pres = &self.pres;
        let h = pres.step;
        let mut total = ZERO;
        for (c, comp) in pres.components.iter().enumerate() {
            let ComponentKind::Fixed { kappa } = comp.kind else { continue };
            let Some(d) = &self.data[pres.unit(c)] else { continue };
            for k in d.t_range() {
                if k <= 0 {
                    continue;
                }
                let t = k as f64 * h;
                total += d.at(0, k) * (h / (1.0 - libm::exp(kappa * t)).abs());
            }
        }
        total
    }

    /// Operator trace split by component type:
    /// `Σ_{B_p} Σ_n ∫ f(γ, np + r(γ) - s(γ)) db`, `Σ_{B_∞} ∫ f(γ, r(γ) - s(γ)) db`
    /// and `Σ_b ∫₀^∞ f(b, t)/|1 - e^{κ_b t}| dt`.
    pub fn trace_parts(&self) -> Result<TraceParts> {
        let pres = &self.pres;
        if self.flag == SupportFlag::Full && pres.has_fixed_points() {
            return Err(Error::FixedWithFullSupport);
        }
        let h = pres.step;
        let mut parts = TraceParts::default();
        for (s, d) in self.data.iter().enumerate() {
            let Some(d) = d else { continue };
            let sh = pres.sheets[s];
            if sh.range != sh.source {
                continue;
            }
            let nb = pres.points[sh.range] as i64;
            match pres.components[sh.range].kind {
                ComponentKind::Periodic { .. } => {
                    let mut acc = ZERO;
                    for k in d.t_range() {
                        if (k - sh.shift).rem_euclid(nb) == 0 {
                            for i in 0..nb as usize {
                                acc += d.at(i, k);
                            }
                        }
                    }
                    parts.periodic += acc * h;
                }
                ComponentKind::Infinite { .. } => {
                    let acc: C64 = (0..nb as usize).map(|i| d.at(i, sh.shift)).sum();
                    parts.infinite += acc * h;
                }
                ComponentKind::Fixed { .. } => {}
            }
        }
        parts.fixed = self.fixed_term();
        Ok(parts)
    }

    /// Operator trace of `f` on `L²(B)`.
    pub fn trace_formula(&self) -> Result<C64> {
        Ok(self.trace_parts()?.total())
    }

    /// Trace on `C_c^∞(G₊*)` including the fixed-point contributions.
    pub fn trace_formula_fixed(&self) -> Result<TraceParts> {
        if self.flag != SupportFlag::Positive {
            return Err(Error::SupportTouchesZero);
        }
        self.trace_parts()
    }

    /// Trace localized at the units: `∫_B f(b, 0) db`.
    pub fn trace_localized(&self) -> C64 {
        let pres = &self.pres;
        let h = pres.step;
        let mut total = ZERO;
        for (c, comp) in pres.components.iter().enumerate() {
            if matches!(comp.kind, ComponentKind::Fixed { .. }) {
                continue;
            }
            let Some(d) = &self.data[pres.unit(c)] else { continue };
            total += (0..pres.points[c]).map(|i| d.at(i, 0)).sum::<C64>() * h;
        }
        total
    }

    /// Matrix of `(f·ξ)(b) = Σ_{γ ∈ H^b} ∫ f(γ, t) ξ(φ̄_t(s(γ))) dt` on the grid.
    pub fn represent(&self) -> Result<Representation> {
        let pres = &self.pres;
        let h = pres.step;
        let mut offsets = Vec::with_capacity(pres.components.len());
        let mut dim = 0;
        for (c, comp) in pres.components.iter().enumerate() {
            if matches!(comp.kind, ComponentKind::Fixed { .. }) {
                offsets.push(None);
            } else {
                offsets.push(Some(dim));
                dim += pres.points[c];
            }
        }
        let mut m = CMat::zeros(dim, dim);
        let mut dirac = Vec::new();
        for (s, d) in self.data.iter().enumerate() {
            let Some(d) = d else { continue };
            let sh = pres.sheets[s];
            let (Some(or), Some(os)) = (offsets[sh.range], offsets[sh.source]) else {
                let kappa = match pres.components[sh.range].kind {
                    ComponentKind::Fixed { kappa } => kappa,
                    _ => unreachable!("fixed points carry only units"),
                };
                let mut weight = ZERO;
                let mut trace_weight = ZERO;
                for k in d.t_range() {
                    let v = d.at(0, k);
                    if v == ZERO {
                        continue;
                    }
                    if k <= 0 || self.flag == SupportFlag::Full {
                        return Err(Error::UnresolvedDirac(k as f64 * h));
                    }
                    weight += v * h;
                    trace_weight += v * (h / (1.0 - libm::exp(kappa * k as f64 * h)).abs());
                }
                dirac.push(DiracPart { component: sh.range, weight, trace_weight });
                continue;
            };
            let nr = pres.points[sh.range];
            let ns = pres.points[sh.source] as i64;
            let periodic = matches!(pres.components[sh.source].kind, ComponentKind::Periodic { .. });
            for i in 0..nr {
                for k in d.t_range() {
                    let v = d.at(i, k);
                    if v == ZERO {
                        continue;
                    }
                    let j = i as i64 - sh.shift + k;
                    let j = if periodic {
                        j.rem_euclid(ns)
                    } else if (0..ns).contains(&j) {
                        j
                    } else {
                        continue;
                    };
                    let idx = (or + i, os + j as usize);
                    let cur = m[idx];
                    m[idx] = cur + v * h;
                }
            }
        }
        Ok(Representation { matrix: m, offsets, dirac })
    }

    /// Band-limited interpolant of a sheet over a periodic component.
    pub fn interpolant(&self, s: usize) -> Result<SheetInterpolant> {
        let pres = &self.pres;
        let sh = pres.sheets[s];
        let comp = pres.components[sh.range];
        let ComponentKind::Periodic { period } = comp.kind else {
            return Err(Error::Invalid("interpolation needs a periodic component".into()));
        };
        let h = pres.step;
        let nb = pres.points[sh.range];
        let Some(d) = &self.data[s] else {
            return Ok(SheetInterpolant { coeffs: Vec::new(), nb, nt: 0, base: comp.base, period, t0: 0.0, window: 1.0 });
        };
        let pad = 4usize;
        let nt = d.n_t + 2 * pad;
        let t0 = (d.t_start - pad as i64) as f64 * h;
        let mut rows: Vec<Vec<C64>> = Vec::with_capacity(nb);
        for i in 0..nb {
            let mut col = vec![ZERO; nt];
            col[pad..pad + d.n_t].copy_from_slice(&d.values[i * d.n_t..(i + 1) * d.n_t]);
            rows.push(dft(&col));
        }
        let mut coeffs = vec![ZERO; nb * nt];
        for kt in 0..nt {
            let col: Vec<C64> = rows.iter().map(|r| r[kt]).collect();
            let f = dft(&col);
            for kb in 0..nb {
                coeffs[kb * nt + kt] = f[kb];
            }
        }
        Ok(SheetInterpolant { coeffs, nb, nt, base: comp.base, period, t0, window: nt as f64 * h })
    }
}

/// Normalized discrete Fourier transform `X_k = n^{-1} Σ_j x_j e^{-2πijk/n}`.
fn dft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let tw: Vec<C64> = (0..n).map(|j| cis_tau(-(j as f64) / n as f64)).collect();
    (0..n)
        .map(|k| {
            let mut s = ZERO;
            for (j, &v) in x.iter().enumerate() {
                s += v * tw[(j * k) % n];
            }
            s / n as f64
        })
        .collect()
}

/// Value at fractional position `u` (one period = 1) of the trigonometric
/// interpolant with normalized DFT coefficients `c`. The Nyquist mode of an
/// even length is split symmetrically.
fn trig_eval(c: &[C64], u: f64) -> C64 {
    let n = c.len();
    let mut s = ZERO;
    for (k, &ck) in c.iter().enumerate() {
        if 2 * k == n {
            s += ck * libm::cos(TAU * (n / 2) as f64 * u);
        } else {
            let f = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            s += ck * cis_tau(f * u);
        }
    }
    s
}

/// Two-dimensional trigonometric interpolant of one sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetInterpolant {
    coeffs: Vec<C64>,
    nb: usize,
    nt: usize,
    base: f64,
    period: f64,
    t0: f64,
    window: f64,
}

impl SheetInterpolant {
    pub fn eval(&self, b: f64, t: f64) -> C64 {
        if self.nt == 0 || t < self.t0 || t > self.t0 + self.window {
            return ZERO;
        }
        let ut = (t - self.t0) / self.window;
        let ub = (b - self.base) / self.period;
        let per_b: Vec<C64> = (0..self.nb).map(|kb| trig_eval(&self.coeffs[kb * self.nt..(kb + 1) * self.nt], ut)).collect();
        trig_eval(&per_b, ub)
    }
}

/// Endomorphism of a ℤ₂-graded fiber `E⁺ ⊕ E⁻`, given blockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedEndo {
    pub plus: CMat,
    pub minus: CMat,
}

impl GradedEndo {
    pub fn new(plus: CMat, minus: CMat) -> Result<Self> {
        if !plus.is_square() || !minus.is_square() {
            return Err(Error::ShapeMismatch("graded blocks must be square".into()));
        }
        Ok(GradedEndo { plus, minus })
    }

    /// Scalar `λ` on a rank-one `E⁺` and `E⁻ = 0`.
    pub fn scalar_even(lambda: C64) -> Self {
        GradedEndo { plus: CMat::scalar(1, lambda), minus: CMat::zeros(0, 0) }
    }

    pub fn supertrace(&self) -> C64 {
        self.plus.trace() - self.minus.trace()
    }

    /// `tr_s(jⁿ)`; negative powers need invertible blocks.
    pub fn supertrace_pow(&self, n: i64) -> Result<C64> {
        let p = self.plus.powi(n, 1e-12).ok_or(Error::SingularBundleMap(0.0))?;
        let m = self.minus.powi(n, 1e-12).ok_or(Error::SingularBundleMap(0.0))?;
        Ok(p.trace() - m.trace())
    }

    /// `tr_s(e^{jt})`.
    pub fn supertrace_exp(&self, t: f64) -> C64 {
        self.plus.scale_re(t).expm().trace() - self.minus.scale_re(t).expm().trace()
    }
}

/// Non-degenerate periodic orbit: period, leaf return map and bundle return map.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitData {
    pub period: f64,
    pub h_prime: CMat,
    pub j: GradedEndo,
}

impl OrbitData {
    /// `|det(1 - h′ⁿ)|`.
    pub fn det_gap(&self, n: i64) -> Result<f64> {
        let d = self.h_prime.rows();
        let hn = self.h_prime.powi(n, 1e-12).ok_or(Error::SingularBundleMap(0.0))?;
        Ok((&CMat::identity(d) - &hn).det().norm())
    }

    /// `tr_s(jⁿ) / |det(1 - h′ⁿ)|`.
    pub fn weight(&self, n: i64, floor: f64) -> Result<C64> {
        let gap = self.det_gap(n)?;
        if gap <= floor {
            return Err(Error::DegenerateOrbit(format!("|det(1 - h'^{n})| = {gap:e}")));
        }
        Ok(self.j.supertrace_pow(n)? / gap)
    }
}

/// Non-degenerate fixed point of the flow: tangent and bundle generators.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointData {
    pub kappa: CMat,
    pub j: GradedEndo,
}

impl FixedPointData {
    /// `|det(1 - e^{κt})|`.
    pub fn det_gap(&self, t: f64) -> f64 {
        let d = self.kappa.rows();
        (&CMat::identity(d) - &self.kappa.scale_re(t).expm()).det().norm()
    }

    /// `tr_s(e^{jt}) / |det(1 - e^{κt})|`.
    pub fn weight(&self, t: f64) -> Result<C64> {
        if !(t > 0.0) {
            return Err(Error::SupportTouchesZero);
        }
        let gap = self.det_gap(t);
        if !(gap > 0.0) {
            return Err(Error::DegenerateFixedPoint { point: t, gap });
        }
        Ok(self.j.supertrace_exp(t) / gap)
    }
}

/// `Θ_Π(f) = Σ_{n≠0} tr_s(jⁿ)/|det(1 - h′ⁿ)| ∫_Π f(v, n p_Π) dv` for `f`
/// sampled on a presentation whose component 0 parametrizes the orbit.
pub fn theta_trace(orbit: &OrbitData, f: &GroupoidFunction, n_max: i64, floor: f64) -> Result<C64> {
    let pres = f.presentation();
    let ComponentKind::Periodic { period } = pres.components().first().map(|c| c.kind).ok_or(Error::Invalid("empty presentation".into()))?
    else {
        return Err(Error::Invalid("orbit functions live on a periodic component".into()));
    };
    if (period - orbit.period).abs() > 1e-9 * period {
        return Err(Error::ShapeMismatch(format!("orbit period {} differs from component period {period}", orbit.period)));
    }
    let Some(d) = f.sheet(pres.unit(0)) else { return Ok(ZERO) };
    let nb = pres.points(0) as i64;
    let h = pres.step();
    let mut total = ZERO;
    for k in d.t_range() {
        if k == 0 || k.rem_euclid(nb) != 0 {
            continue;
        }
        let n = k / nb;
        let row: C64 = (0..nb as usize).map(|i| d.at(i, k)).sum();
        if row == ZERO {
            continue;
        }
        if n.abs() > n_max {
            return Err(Error::DegenerateOrbit(format!("support reaches n = {n} beyond n_max = {n_max}")));
        }
        total += orbit.weight(n, floor)? * row * h;
    }
    Ok(total)
}

/// `Θ_Π` for a function given in closed form with `t`-support in
/// `[t_lo, t_hi]`; orbit integrals use Gauss-Legendre panels.
pub fn theta_trace_fn(
    orbit: &OrbitData,
    f: impl Fn(f64, f64) -> C64,
    t_support: (f64, f64),
    n_max: i64,
    floor: f64,
    panels: usize,
    order: usize,
) -> Result<C64> {
    let p = orbit.period;
    let n_lo = libm::ceil(t_support.0 / p) as i64;
    let n_hi = libm::floor(t_support.1 / p) as i64;
    let (nodes, weights) = composite_gauss(0.0, p, panels, order);
    let mut total = ZERO;
    for n in n_lo..=n_hi {
        if n == 0 {
            continue;
        }
        if n.abs() > n_max {
            return Err(Error::DegenerateOrbit(format!("support reaches n = {n} beyond n_max = {n_max}")));
        }
        let integral: C64 = nodes.iter().zip(&weights).map(|(&v, &w)| f(v, n as f64 * p) * w).sum();
        total += orbit.weight(n, floor)? * integral;
    }
    Ok(total)
}

/// `W_v(f) = ∫₀^∞ tr_s(e^{j t})/|det(1 - e^{κ t})| f(v, t) dt` for `f` on the
/// unit sheet of a fixed-point component `c`.
pub fn w_trace(fp: &FixedPointData, f: &GroupoidFunction, c: usize) -> Result<C64> {
    let pres = f.presentation();
    if !matches!(pres.components().get(c).map(|x| x.kind), Some(ComponentKind::Fixed { .. })) {
        return Err(Error::Invalid(format!("component {c} is not a fixed point")));
    }
    let Some(d) = f.sheet(pres.unit(c)) else { return Ok(ZERO) };
    let h = pres.step();
    let mut total = ZERO;
    for k in d.t_range() {
        let v = d.at(0, k);
        if v == ZERO {
            continue;
        }
        if k <= 0 {
            return Err(Error::SupportTouchesZero);
        }
        total += fp.weight(k as f64 * h)? * v * h;
    }
    Ok(total)
}

/// `W_v` for a closed-form `f` with support in `[t_lo, t_hi] ⊂ (0, ∞)`.
pub fn w_trace_fn(fp: &FixedPointData, f: impl Fn(f64) -> C64, t_support: (f64, f64), panels: usize, order: usize) -> Result<C64> {
    if !(t_support.0 > 0.0) {
        return Err(Error::SupportTouchesZero);
    }
    let (nodes, weights) = composite_gauss(t_support.0, t_support.1, panels, order);
    let mut total = ZERO;
    for (&t, &w) in nodes.iter().zip(&weights) {
        total += fp.weight(t)? * f(t) * w;
    }
    Ok(total)
}

/// Grid on `V = S¹_θ × B` for the product system with flow
/// `φ_t(θ, b) = (θ + ωt, b + t)`; the leaf circle has length 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowGrid {
    pub n_theta: usize,
    pub n_b: usize,
    pub period: f64,
    pub omega: f64,
}

impl FlowGrid {
    pub fn step(&self) -> f64 {
        self.period / self.n_b as f64
    }

    /// Interpolation weights moving samples on the θ grid to `θ_i + shift`.
    fn theta_shift(&self, shift: f64) -> CMat {
        let n = self.n_theta;
        CMat::from_fn(n, n, |i, j| {
            let u = (i as f64 - j as f64) / n as f64 + shift;
            let mut s = ZERO;
            for k in 0..n {
                if 2 * k == n {
                    s += C64::new(libm::cos(TAU * (n / 2) as f64 * u), 0.0);
                } else {
                    let f = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
                    s += cis_tau(f * u);
                }
            }
            s / n as f64
        })
    }
}

/// `rank × rank` matrix-valued function on `V × ℝ` (rank 1: `V⋊ℝ`; rank `k`:
/// `M⋊G` for `k` transversal copies).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowFunction {
    grid: FlowGrid,
    rank: usize,
    t_start: i64,
    n_t: usize,
    values: Vec<C64>,
}

impl FlowFunction {
    fn idx(&self, it: usize, ib: usize, m: usize, a: usize, c: usize) -> usize {
        (((it * self.grid.n_b + ib) * self.n_t + m) * self.rank + a) * self.rank + c
    }

    pub fn grid(&self) -> FlowGrid {
        self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Samples a scalar function `f(θ, b, t)` for grid times in `[t_lo, t_hi]`.
    pub fn from_fn(grid: FlowGrid, t_lo: f64, t_hi: f64, f: impl Fn(f64, f64, f64) -> C64) -> Self {
        let h = grid.step();
        let k0 = libm::ceil(t_lo / h - 1e-9) as i64;
        let k1 = libm::floor(t_hi / h + 1e-9) as i64;
        let n_t = (k1 - k0 + 1).max(1) as usize;
        let mut values = Vec::with_capacity(grid.n_theta * grid.n_b * n_t);
        for it in 0..grid.n_theta {
            for ib in 0..grid.n_b {
                for m in 0..n_t {
                    values.push(f(it as f64 / grid.n_theta as f64, ib as f64 * h, (k0 + m as i64) as f64 * h));
                }
            }
        }
        FlowFunction { grid, rank: 1, t_start: k0, n_t, values }
    }

    /// θ-independent lift of the unit sheet of component 0.
    pub fn from_transversal(grid: FlowGrid, f: &GroupoidFunction) -> Result<Self> {
        let pres = f.presentation();
        if pres.points(0) != grid.n_b || (pres.step() - grid.step()).abs() > 1e-12 {
            return Err(Error::ShapeMismatch("transversal grid differs from the flow grid".into()));
        }
        let Some(d) = f.sheet(pres.unit(0)) else {
            return Ok(FlowFunction { grid, rank: 1, t_start: 0, n_t: 1, values: vec![ZERO; grid.n_theta * grid.n_b] });
        };
        let mut values = Vec::with_capacity(grid.n_theta * grid.n_b * d.n_t);
        for _ in 0..grid.n_theta {
            values.extend_from_slice(&d.values);
        }
        Ok(FlowFunction { grid, rank: 1, t_start: d.t_start, n_t: d.n_t, values })
    }

    pub fn value(&self, it: usize, ib: usize, k: i64, a: usize, c: usize) -> C64 {
        let m = k - self.t_start;
        if m < 0 || m >= self.n_t as i64 {
            return ZERO;
        }
        self.values[self.idx(it, ib, m as usize, a, c)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest pointwise difference, over the union of both time windows.
    pub fn max_diff(&self, other: &FlowFunction) -> Result<f64> {
        if self.grid != other.grid || self.rank != other.rank {
            return Err(Error::ShapeMismatch("flow functions on different grids".into()));
        }
        let lo = self.t_start.min(other.t_start);
        let hi = (self.t_start + self.n_t as i64).max(other.t_start + other.n_t as i64);
        let mut worst = 0.0f64;
        for it in 0..self.grid.n_theta {
            for ib in 0..self.grid.n_b {
                for k in lo..hi {
                    for a in 0..self.rank {
                        for c in 0..self.rank {
                            worst = worst.max((self.value(it, ib, k, a, c) - other.value(it, ib, k, a, c)).norm());
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    /// `(F*G)_{ac}(v, T) = Σ_l ∫ F_{al}(v, s) G_{lc}(φ_s(v), T - s) ds`.
    pub fn convolve(&self, other: &FlowFunction) -> Result<FlowFunction> {
        if self.grid != other.grid || self.rank != other.rank {
            return Err(Error::ShapeMismatch("flow functions on different grids".into()));
        }
        let g = self.grid;
        let h = g.step();
        let r = self.rank;
        let n_t = self.n_t + other.n_t - 1;
        let mut out = FlowFunction { grid: g, rank: r, t_start: self.t_start + other.t_start, n_t, values: vec![ZERO; g.n_theta * g.n_b * n_t * r * r] };
        let block = g.n_b * other.n_t * r * r;
        for ms in 0..self.n_t {
            let s = self.t_start + ms as i64;
            let shift = g.theta_shift(g.omega * s as f64 * h);
            let mut shifted = vec![ZERO; g.n_theta * block];
            for it in 0..g.n_theta {
                for jt in 0..g.n_theta {
                    let w = shift[(it, jt)];
                    for (o, &v) in shifted[it * block..(it + 1) * block].iter_mut().zip(&other.values[jt * block..(jt + 1) * block]) {
                        *o += w * v;
                    }
                }
            }
            for it in 0..g.n_theta {
                for ib in 0..g.n_b {
                    let jb = (ib as i64 + s).rem_euclid(g.n_b as i64) as usize;
                    for a in 0..r {
                        for l in 0..r {
                            let fv = self.values[self.idx(it, ib, ms, a, l)] * h;
                            if fv == ZERO {
                                continue;
                            }
                            for mg in 0..other.n_t {
                                let mo = ms + mg;
                                for c in 0..r {
                                    let gv = shifted[((it * g.n_b + jb) * other.n_t + mg) * r * r + l * r + c];
                                    let oi = out.idx(it, ib, mo, a, c);
                                    out.values[oi] += fv * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Morita map `ρ(f)_{ij}(v, t) = c_i(v) f(v, t) c_j(φ_t(v))` for cut-offs with
/// `Σ_i c_i² = 1`.
pub fn rho(f: &FlowFunction, cutoffs: &[&dyn Fn(f64, f64) -> f64]) -> Result<FlowFunction> {
    if f.rank != 1 {
        return Err(Error::ShapeMismatch("rho acts on scalar functions".into()));
    }
    let g = f.grid;
    let h = g.step();
    let k = cutoffs.len();
    let mut worst = 0.0f64;
    for it in 0..g.n_theta {
        for ib in 0..g.n_b {
            let (th, b) = (it as f64 / g.n_theta as f64, ib as f64 * h);
            let s: f64 = cutoffs.iter().map(|c| c(th, b) * c(th, b)).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    if worst > 1e-10 {
        return Err(Error::PartitionViolated(worst));
    }
    let mut out = FlowFunction { grid: g, rank: k, t_start: f.t_start, n_t: f.n_t, values: vec![ZERO; g.n_theta * g.n_b * f.n_t * k * k] };
    for it in 0..g.n_theta {
        for ib in 0..g.n_b {
            let (th, b) = (it as f64 / g.n_theta as f64, ib as f64 * h);
            for m in 0..f.n_t {
                let t = (f.t_start + m as i64) as f64 * h;
                let v = f.values[f.idx(it, ib, m, 0, 0)];
                for i in 0..k {
                    let ci = cutoffs[i](th, b);
                    for j in 0..k {
                        let cj = cutoffs[j](th + g.omega * t, b + t);
                        let oi = out.idx(it, ib, m, i, j);
                        out.values[oi] = v * (ci * cj);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact decimal `num/den` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Rational {
    /// Parses a decimal string such as `0.6180339887` or `-1.5`.
    pub fn parse_decimal(s: &str) -> Result<Rational> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 30 {
            return Err(Error::Invalid(format!("not a decimal number: {s:?}")));
        }
        let digits: String = int.chars().chain(frac.chars()).collect();
        let mut num: i128 = 0;
        for c in digits.chars() {
            num = num
                .checked_mul(10)
                .and_then(|x| x.checked_add(c as i128 - '0' as i128))
                .ok_or_else(|| Error::Invalid(format!("decimal {s:?} overflows")))?;
        }
        let den = 10i128.pow(frac.len() as u32);
        let g = gcd(num, den).max(1);
        Ok(Rational { num: if neg { -num / g } else { num / g }, den: den / g })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Built-in system families.
#[derive(Clone, Debug, PartialEq)]
pub enum FoliatedFlowSystem {
    /// `V = S¹_θ × B`, `B = ℝ/pℤ`, flow `(θ + ωt, b + t)`, trivial holonomy.
    Product { period: f64, omega: Rational },
    /// User-supplied orbit and fixed-point data.
    Declarative { orbits: Vec<OrbitData>, fixed_points: Vec<FixedPointData> },
}

impl FoliatedFlowSystem {
    pub fn product(period: f64, omega: &str) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Invalid(format!("period {period} must be positive")));
        }
        Ok(FoliatedFlowSystem::Product { period, omega: Rational::parse_decimal(omega)? })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyReport {
    pub orbits: Vec<OrbitData>,
    pub fixed_points: Vec<FixedPointData>,
    /// Human-readable reasons; empty when every hypothesis is certified.
    pub issues: Vec<String>,
    /// Smallest certified gap `|det(1 - h′ⁿ)|`, `|det(1 - e^{κt})|` or
    /// `dist(nω, ℤ)` encountered.
    pub min_gap: f64,
}

impl DegeneracyReport {
    pub fn is_degenerate(&self) -> bool {
        !self.issues.is_empty()
    }

    /// Refuses downstream evaluation on degenerate systems.
    pub fn certify(self) -> Result<Self> {
        if self.is_degenerate() {
            return Err(Error::Degenerate(self.issues.join("; ")));
        }
        Ok(self)
    }
}

fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if g1 < g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
    }
    g1.min(g2)
}

/// Enumerates periodic orbits and fixed points with period multiples up to
/// `n_max` and certifies non-degeneracy against `floor`.
pub fn detect_orbits(system: &FoliatedFlowSystem, n_max: i64, floor: f64) -> DegeneracyReport {
    let mut issues = Vec::new();
    let mut min_gap = f64::INFINITY;
    match system {
        FoliatedFlowSystem::Product { period, omega } => {
            // Return map of the flow to B after n turns is the rotation by nω;
            // every point is periodic as soon as nω ∈ ℤ, with h′ = 1.
            if omega.den <= n_max as i128 {
                issues.push(format!(
                    "rational slope {}/{}: the leaf return map after {} turns (time {}) is the identity, so det(1 - h') = 0",
                    omega.num,
                    omega.den,
                    omega.den,
                    omega.den as f64 * period
                ));
                min_gap = 0.0;
            } else {
                let w = omega.to_f64();
                for n in 1..=n_max {
                    let x = n as f64 * w;
                    min_gap = min_gap.min((x - libm::round(x)).abs());
                }
            }
            DegeneracyReport { orbits: Vec::new(), fixed_points: Vec::new(), issues, min_gap }
        }
        FoliatedFlowSystem::Declarative { orbits, fixed_points } => {
            for (o, orbit) in orbits.iter().enumerate() {
                if !(orbit.period > 0.0) {
                    issues.push(format!("orbit {o}: period {} is not positive", orbit.period));
                }
                let invertible = orbit.h_prime.det().norm() > floor;
                for n in (-n_max..=n_max).filter(|&n| n != 0 && (n > 0 || invertible)) {
                    match orbit.det_gap(n) {
                        Ok(g) => {
                            min_gap = min_gap.min(g);
                            if g <= floor {
                                issues.push(format!("orbit {o}: |det(1 - h'^{n})| = {g:e}"));
                            }
                        }
                        Err(e) => issues.push(format!("orbit {o}: {e}")),
                    }
                }
            }
            for (v, fp) in fixed_points.iter().enumerate() {
                let d = fp.kappa.rows() as f64;
                let g = |t: f64| fp.det_gap(t) / libm::pow(t.min(1.0), d);
                let ts: Vec<f64> = (0..=400).map(|i| 1e-3 * libm::pow(1e5, i as f64 / 400.0)).collect();
                let gs: Vec<f64> = ts.iter().map(|&t| g(t)).collect();
                let mut worst = gs.iter().cloned().fold(f64::INFINITY, f64::min);
                for i in 1..ts.len() - 1 {
                    if gs[i] <= gs[i - 1] && gs[i] <= gs[i + 1] {
                        worst = worst.min(golden_min(&g, ts[i - 1], ts[i + 1]));
                    }
                }
                min_gap = min_gap.min(worst);
                if !(worst > floor) {
                    issues.push(format!("fixed point {v}: det(1 - e^(kappa t)) reaches {worst:e} for some t > 0"));
                }
            }
            DegeneracyReport { orbits: orbits.clone(), fixed_points: fixed_points.clone(), issues, min_gap }
        }
    }
}
