//! Hermitian symmetric spaces and 3-symmetric spaces of type III, with the
//! isotropy-dimension comparison between the two lists.
//!
//! Names and restrictions are kept as printed. Discrete quotients are
//! dimension zero and are ignored in the arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const DEFAULT_SWEEP_BOUND: u32 = 12;

/// Compact simple Lie algebra type, normalized across the low-rank
/// coincidences `B₁ = C₁ = A₁`, `C₂ = B₂` and `D₃ = A₃`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SimpleType {
    A(u32),
    B(u32),
    C(u32),
    D(u32),
    E6,
    E7,
    E8,
    F4,
}

impl SimpleType {
    pub fn canonical(self) -> Self {
        match self {
            SimpleType::B(1) | SimpleType::C(1) => SimpleType::A(1),
            SimpleType::C(2) => SimpleType::B(2),
            SimpleType::D(3) => SimpleType::A(3),
            other => other,
        }
    }

    pub fn dim(self) -> u32 {
        match self {
            SimpleType::A(k) => k * (k + 2),
            SimpleType::B(k) | SimpleType::C(k) => k * (2 * k + 1),
            SimpleType::D(k) => k * (2 * k - 1),
            SimpleType::E6 => 78,
            SimpleType::E7 => 133,
            SimpleType::E8 => 248,
            SimpleType::F4 => 52,
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::A(k) => write!(f, "A{k}"),
            SimpleType::B(k) => write!(f, "B{k}"),
            SimpleType::C(k) => write!(f, "C{k}"),
            SimpleType::D(k) => write!(f, "D{k}"),
            SimpleType::E6 => f.write_str("E6"),
            SimpleType::E7 => f.write_str("E7"),
            SimpleType::E8 => f.write_str("E8"),
            SimpleType::F4 => f.write_str("F4"),
        }
    }
}

pub fn dim_so(k: u32) -> u32 {
    k * k.saturating_sub(1) / 2
}

pub fn dim_u(k: u32) -> u32 {
    k * k
}

pub fn dim_sp(k: u32) -> u32 {
    k * (2 * k + 1)
}

/// Compact reductive Lie algebra: canonical simple factors plus a torus.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reductive {
    pub simple: Vec<SimpleType>,
    pub torus: u32,
}

impl Reductive {
    fn torus(rank: u32) -> Self {
        Self { simple: Vec::new(), torus: rank }
    }

    fn simple(t: SimpleType) -> Self {
        Self { simple: vec![t.canonical()], torus: 0 }
    }

    pub fn so(k: u32) -> Self {
        match k {
            0 | 1 => Self::torus(0),
            2 => Self::torus(1),
            4 => Self::simple(SimpleType::A(1)).times(&Self::simple(SimpleType::A(1))),
            k if k % 2 == 1 => Self::simple(SimpleType::B(k / 2)),
            k => Self::simple(SimpleType::D(k / 2)),
        }
    }

    pub fn su(k: u32) -> Self {
        if k <= 1 {
            Self::torus(0)
        } else {
            Self::simple(SimpleType::A(k - 1))
        }
    }

    pub fn u(k: u32) -> Self {
        if k == 0 {
            Self::torus(0)
        } else {
            Self::su(k).times(&Self::torus(1))
        }
    }

    pub fn sp(k: u32) -> Self {
        if k == 0 {
            Self::torus(0)
        } else {
            Self::simple(SimpleType::C(k))
        }
    }

    /// `S(U_a × U_b × …)`: the product of unitary factors minus one circle.
    pub fn s_unitary(blocks: &[u32]) -> Self {
        let mut out = blocks.iter().fold(Self::torus(0), |acc, &k| acc.times(&Self::u(k)));
        out.torus = out.torus.saturating_sub(1);
        out
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut simple: Vec<SimpleType> = self.simple.iter().chain(&other.simple).copied().collect();
        simple.sort();
        Self { simple, torus: self.torus + other.torus }
    }

    pub fn dim(&self) -> u32 {
        self.simple.iter().map(|t| t.dim()).sum::<u32>() + self.torus
    }
}

impl fmt::Display for Reductive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.simple.iter().map(|t| t.to_string()).collect();
        if self.torus > 0 {
            parts.push(format!("T{}", self.torus));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Family1 {
    ProjectiveSpace,
    OddQuadric,
    SpOverU,
    EvenQuadric,
    SoOverU,
    E6,
    E7,
}

/// Row of the Hermitian symmetric space list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricSpaceEntry {
    pub group_name: String,
    pub isotropy_name: String,
    pub restrictions: String,
    family: Family1,
}

/// Concrete parameter value of a [`SymmetricSpaceEntry`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricSpaceInstance {
    pub n: Option<u32>,
    pub group: SimpleType,
    pub dim_g: u32,
    pub dim_h: u32,
    pub isotropy: Reductive,
}

impl SymmetricSpaceEntry {
    pub fn is_parametric(&self) -> bool {
        !matches!(self.family, Family1::E6 | Family1::E7)
    }

    /// The row at parameter `n`, if admissible. Rows without a parameter
    /// accept only `None`.
    pub fn at(&self, n: Option<u32>) -> Option<SymmetricSpaceInstance> {
        let (group, isotropy) = match (self.family, n) {
            // The stabilizer of a line, S(U_{n−1} × U_1).
            (Family1::ProjectiveSpace, Some(n)) if n >= 2 => (SimpleType::A(n - 1), Reductive::s_unitary(&[n - 1, 1])),
            (Family1::OddQuadric, Some(n)) if n >= 2 => (SimpleType::B(n), Reductive::so(2 * n - 1).times(&Reductive::so(2))),
            (Family1::SpOverU, Some(n)) if n >= 3 => (SimpleType::C(n), Reductive::u(n)),
            (Family1::EvenQuadric, Some(n)) if n >= 4 => (SimpleType::D(n), Reductive::so(2 * (n - 1)).times(&Reductive::so(2))),
            (Family1::SoOverU, Some(n)) if n >= 4 => (SimpleType::D(n), Reductive::u(n)),
            (Family1::E6, None) => (SimpleType::E6, Reductive::so(10).times(&Reductive::so(2))),
            (Family1::E7, None) => (SimpleType::E7, Reductive::simple(SimpleType::E6).times(&Reductive::torus(1))),
            _ => return None,
        };
        Some(SymmetricSpaceInstance { n, group: group.canonical(), dim_g: group.dim(), dim_h: isotropy.dim(), isotropy })
    }

    pub fn instances(&self, bound: u32) -> Vec<SymmetricSpaceInstance> {
        if self.is_parametric() {
            (1..=bound).filter_map(|n| self.at(Some(n))).collect()
        } else {
            self.at(None).into_iter().collect()
        }
    }
}

pub fn table1_entries() -> Vec<SymmetricSpaceEntry> {
    let row = |group_name: &str, isotropy_name: &str, restrictions: &str, family| SymmetricSpaceEntry {
        group_name: group_name.into(),
        isotropy_name: isotropy_name.into(),
        restrictions: restrictions.into(),
        family,
    };
    vec![
        row("SU_n/Z_n", "(SO_{2n-1} x SO_2)/Z_n", "n >= 2", Family1::ProjectiveSpace),
        row("SO_{2n+1}", "SO_{2n-1} x SO_2", "n >= 2", Family1::OddQuadric),
        row("Sp_n/Z_2", "U_n/Z_2", "n >= 3", Family1::SpOverU),
        row("SO_{2n}/Z_2", "(SO_{2(n-1)} x SO_2)/Z_2", "n >= 4", Family1::EvenQuadric),
        row("SO_{2n}/Z_2", "U_n/Z_2", "n >= 4", Family1::SoOverU),
        row("E_6/Z_3", "(SO_10 x SO_2)/Z_2", "--", Family1::E6),
        row("E_7/Z_2", "(E_6 x T^1)/Z_3", "--", Family1::E7),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Family2 {
    OddOrthogonal,
    Symplectic,
    EvenOrthogonal,
    F4,
    E6,
    E7Spin,
    E7Unitary,
    E8,
}

/// Row of the list of 3-symmetric spaces of type III with `dim V ≠ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeSymmetricEntry {
    pub group_name: String,
    pub isotropy_name: String,
    pub dim_v_formula: String,
    pub restrictions: String,
    family: Family2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeSymmetricInstance {
    pub n: Option<u32>,
    pub i: Option<u32>,
    pub group: SimpleType,
    pub dim_g: u32,
    pub dim_h: u32,
    pub dim_v: u32,
    pub isotropy: Reductive,
    /// `dim K − dim H` for the intermediate subgroup `H ⊂ K ⊂ G` with
    /// symmetric fibre `K/H`; an independent count of `dim V`.
    pub fibre_dim: u32,
}

impl ThreeSymmetricEntry {
    pub fn is_parametric(&self) -> bool {
        matches!(self.family, Family2::OddOrthogonal | Family2::Symplectic | Family2::EvenOrthogonal)
    }

    pub fn at(&self, n: Option<u32>, i: Option<u32>) -> Option<ThreeSymmetricInstance> {
        let (group, isotropy, intermediate, dim_v) = match (self.family, n, i) {
            // i ≤ n keeps SO_{2(n−i)+1} defined.
            (Family2::OddOrthogonal, Some(n), Some(i)) if n > 2 && i > 2 && i <= n => (
                SimpleType::B(n),
                Reductive::so(2 * (n - i) + 1).times(&Reductive::u(i)),
                Reductive::so(2 * (n - i) + 1).times(&Reductive::so(2 * i)),
                i * (i - 1),
            ),
            (Family2::Symplectic, Some(n), Some(i)) if n >= 2 && 1 < i && i < n => (
                SimpleType::C(n),
                Reductive::u(i).times(&Reductive::sp(n - i)),
                Reductive::sp(i).times(&Reductive::sp(n - i)),
                i * (i + 1),
            ),
            (Family2::EvenOrthogonal, Some(n), Some(i)) if n >= 4 && 2 < i && i + 1 < n => (
                SimpleType::D(n),
                Reductive::so(2 * (n - i)).times(&Reductive::u(i)),
                Reductive::so(2 * (n - i)).times(&Reductive::so(2 * i)),
                i * (i - 1),
            ),
            (Family2::F4, None, None) => {
                (SimpleType::F4, Reductive::simple(SimpleType::B(3)).times(&Reductive::torus(1)), Reductive::so(9), 14)
            }
            (Family2::E6, None, None) => (
                SimpleType::E6,
                Reductive::s_unitary(&[5, 1]).times(&Reductive::su(2)),
                Reductive::su(6).times(&Reductive::su(2)),
                10,
            ),
            (Family2::E7Spin, None, None) => (
                SimpleType::E7,
                Reductive::su(2).times(&Reductive::so(10)).times(&Reductive::so(2)),
                Reductive::su(2).times(&Reductive::so(12)),
                20,
            ),
            (Family2::E7Unitary, None, None) => (SimpleType::E7, Reductive::s_unitary(&[7, 1]), Reductive::su(8), 14),
            (Family2::E8, None, None) => (SimpleType::E8, Reductive::so(14).times(&Reductive::so(2)), Reductive::so(16), 28),
            _ => return None,
        };
        Some(ThreeSymmetricInstance {
            n,
            i,
            group: group.canonical(),
            dim_g: group.dim(),
            dim_h: isotropy.dim(),
            dim_v,
            fibre_dim: intermediate.dim() - isotropy.dim(),
            isotropy,
        })
    }

    pub fn instances(&self, bound: u32) -> Vec<ThreeSymmetricInstance> {
        if !self.is_parametric() {
            return self.at(None, None).into_iter().collect();
        }
        let mut out = Vec::new();
        for n in 1..=bound {
            for i in 1..=n {
                out.extend(self.at(Some(n), Some(i)));
            }
        }
        out
    }
}

pub fn table2_entries() -> Vec<ThreeSymmetricEntry> {
    let row = |group_name: &str, isotropy_name: &str, dim_v_formula: &str, restrictions: &str, family| ThreeSymmetricEntry {
        group_name: group_name.into(),
        isotropy_name: isotropy_name.into(),
        dim_v_formula: dim_v_formula.into(),
        restrictions: restrictions.into(),
        family,
    };
    vec![
        row("SO_{2n+1}", "SO_{(2n-i)+1} x U_i", "i(i-1)", "n > 2 and i > 2", Family2::OddOrthogonal),
        row("Sp_n/Z_2", "(U_i x Sp_{n-i})/Z_2", "i(i+1)", "n >= 2 and 1 < i < n", Family2::Symplectic),
        row("SO_{2n}/Z_2", "(SO_{2(n-i)} x U_i)/Z_2", "i(i-1)", "n >= 4 and 2 < i < n-1", Family2::EvenOrthogonal),
        row("F_4", "Spin_7 x T^1", "14", "--", Family2::F4),
        row("E_6/Z_3", "S(U_5 x U_1 x SU_2)/Z_2", "10", "--", Family2::E6),
        row("E_7/Z_2", "(SU_2 x (SO_10 x SO_2))/Z_2", "20", "--", Family2::E7Spin),
        row("E_7/Z_2", "S(U_7 x U_1)/Z_4", "14", "--", Family2::E7Unitary),
        row("E_8", "SO_14 x SO_2", "28", "--", Family2::E8),
    ]
}

/// One compared pair of rows sharing the isometry group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub group: SimpleType,
    pub symmetric_row: usize,
    pub three_symmetric_row: usize,
    pub n: Option<u32>,
    pub i: Option<u32>,
    pub symmetric_dim_h: u32,
    pub three_symmetric_dim_h: u32,
    /// Isotropy dimensions differ.
    pub differ: bool,
    /// Isotropy algebras are non-isomorphic.
    pub structurally_distinct: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub bound: u32,
    pub pairs: Vec<OverlapPair>,
    /// Every compared pair has different isotropy dimensions.
    pub pass: bool,
    /// Every compared pair has non-isomorphic isotropy algebras.
    pub structural_pass: bool,
}

impl OverlapReport {
    pub fn failures(&self) -> impl Iterator<Item = &OverlapPair> {
        self.pairs.iter().filter(|p| !p.differ)
    }
}

/// Compares the isotropy of all instances, with parameters up to `bound`,
/// whose isometry algebras coincide. Equal dimensions fail the check even
/// when the algebras differ; both verdicts are reported.
pub fn overlap_check(bound: u32) -> OverlapReport {
    let t1: Vec<(usize, SymmetricSpaceInstance)> =
        table1_entries().iter().enumerate().flat_map(|(k, e)| e.instances(bound).into_iter().map(move |x| (k, x))).collect();
    let mut pairs = Vec::new();
    for (k2, e2) in table2_entries().iter().enumerate() {
        for b in e2.instances(bound) {
            for (k1, a) in t1.iter().filter(|(_, a)| a.group == b.group) {
                pairs.push(OverlapPair {
                    group: b.group,
                    symmetric_row: *k1,
                    three_symmetric_row: k2,
                    n: b.n,
                    i: b.i,
                    symmetric_dim_h: a.dim_h,
                    three_symmetric_dim_h: b.dim_h,
                    differ: a.dim_h != b.dim_h,
                    structurally_distinct: a.isotropy != b.isotropy,
                });
            }
        }
    }
    let pass = pairs.iter().all(|p| p.differ);
    let structural_pass = pairs.iter().all(|p| p.structurally_distinct);
    OverlapReport { bound, pairs, pass, structural_pass }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricSpaceRow {
    #[serde(flatten)]
    pub entry: SymmetricSpaceEntry,
    pub instances: Vec<SymmetricSpaceInstance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeSymmetricRow {
    #[serde(flatten)]
    pub entry: ThreeSymmetricEntry,
    pub instances: Vec<ThreeSymmetricInstance>,
}

/// Both tables with their instances up to `bound`, and the overlap verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogExport {
    pub hermitian_symmetric: Vec<SymmetricSpaceRow>,
    pub three_symmetric_type_iii: Vec<ThreeSymmetricRow>,
    pub overlap: OverlapReport,
}

pub fn catalog_export(bound: u32) -> CatalogExport {
    CatalogExport {
        hermitian_symmetric: table1_entries()
            .into_iter()
            .map(|e| SymmetricSpaceRow { instances: e.instances(bound), entry: e })
            .collect(),
        three_symmetric_type_iii: table2_entries()
            .into_iter()
            .map(|e| ThreeSymmetricRow { instances: e.instances(bound), entry: e })
            .collect(),
        overlap: overlap_check(bound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_rows() {
        let t = table1_entries();
        assert_eq!(t.len(), 7);
        let q = t[1].at(Some(2)).unwrap();
        assert_eq!((q.dim_g, q.dim_h), (10, 4));
        let e7 = t[6].at(None).unwrap();
        assert_eq!((e7.dim_g, e7.dim_h), (133, 79));
        assert!(t[2].at(Some(2)).is_none());
        assert!(t[5].at(Some(3)).is_none());
    }

    #[test]
    fn three_symmetric_rows() {
        let t = table2_entries();
        assert_eq!(t.len(), 8);
        let fixed: Vec<u32> = t[3..].iter().map(|e| e.at(None, None).unwrap().dim_v).collect();
        assert_eq!(fixed, vec![14, 10, 20, 14, 28]);
        assert_eq!(t[1].at(Some(4), Some(2)).unwrap().dim_v, 6);
        assert_eq!(t[0].at(Some(4), Some(3)).unwrap().dim_h, 12);
        assert_eq!(t[3].at(None, None).unwrap().dim_h, 22);
        let e7: Vec<u32> = t[5..7].iter().map(|e| e.at(None, None).unwrap().dim_h).collect();
        assert_eq!(e7, vec![49, 49]);
        assert!(t[2].at(Some(5), Some(4)).is_none());
    }

    #[test]
    fn printed_fibre_dimensions_match_intermediate_subgroups() {
        for e in table2_entries() {
            for x in e.instances(16) {
                assert_eq!(x.dim_v, x.fibre_dim, "{} n={:?} i={:?}", e.group_name, x.n, x.i);
            }
        }
    }

    #[test]
    fn low_rank_coincidences_are_merged() {
        assert_eq!(SimpleType::C(2).canonical(), SimpleType::B(2));
        assert_eq!(SimpleType::D(3).canonical(), SimpleType::A(3));
        assert_eq!(SimpleType::D(3).dim(), SimpleType::A(3).dim());
    }

    #[test]
    fn isotropy_dimensions_match_classical_formulas() {
        assert_eq!(Reductive::so(7).dim(), dim_so(7));
        assert_eq!(Reductive::so(4).dim(), dim_so(4));
        assert_eq!(Reductive::so(6), Reductive::su(4));
        assert_eq!(Reductive::sp(2), Reductive::so(5));
        assert_eq!(Reductive::s_unitary(&[5, 1]).dim(), 25);
        for n in 2..10 {
            assert_eq!(Reductive::u(n).dim(), dim_u(n));
            assert_eq!(Reductive::sp(n).dim(), dim_sp(n));
        }
    }

    #[test]
    fn dimension_overlap_has_counterexamples() {
        let report = overlap_check(DEFAULT_SWEEP_BOUND);
        assert!(!report.pairs.is_empty());
        let equal: Vec<(Option<u32>, Option<u32>, u32)> = report.failures().map(|p| (p.n, p.i, p.symmetric_dim_h)).collect();
        assert_eq!(
            equal,
            vec![(Some(5), Some(2), 25), (Some(8), Some(3), 64), (Some(11), Some(4), 121), (Some(10), Some(3), 100)]
        );
        assert!(!report.pass);
        assert!(report.structural_pass);
        assert!(overlap_check(24).structural_pass);
    }

    #[test]
    fn export_round_trips() {
        let json = serde_json::to_string(&catalog_export(8)).unwrap();
        let back: CatalogExport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, catalog_export(8));
    }
}
