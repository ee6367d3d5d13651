//! Version ordering and range matching checked two ways: a hand-derived
//! vector table, and exhaustive comparison against a rule-transcription
//! oracle over a bounded version lattice. The oracle works on structured
//! forms and never calls the parser it is checking.

use std::cmp::Ordering;

use umr_core::version::{best_match, Version, VersionReq};

// Strictly ascending precedence; every adjacent and non-adjacent pair is
// checked both ways. Derived by hand from the precedence rules.
const ASCENDING: [&str; 14] = [
    "0.0.0",
    "0.9.9",
    "0.10.0",
    "1.0.0-1",
    "1.0.0-2",
    "1.0.0-11",
    "1.0.0-alpha",
    "1.0.0-alpha.1",
    "1.0.0-alpha.beta",
    "1.0.0-beta",
    "1.0.0-beta.2",
    "1.0.0-beta.11",
    "1.0.0-rc.1",
    "1.0.0",
];

// Precedence pairs that the chain above cannot express.
const ORDER_PAIRS: [(&str, &str, Ordering); 8] = [
    ("1.0.0+build.1", "1.0.0", Ordering::Equal),
    ("1.0.0+a", "1.0.0+b", Ordering::Equal),
    ("1.0.0-alpha+x", "1.0.0-alpha", Ordering::Equal),
    ("1.0.0-Alpha", "1.0.0-alpha", Ordering::Less),
    ("1.0.0-a", "1.0.0-a.1", Ordering::Less),
    ("1.0.0-alpha.1", "1.0.0-1", Ordering::Greater),
    ("2.0.0", "1.99.99", Ordering::Greater),
    ("0.0.1", "0.0.2-rc.1", Ordering::Less),
];

const MATCH_VECTORS: [(&str, &str, bool); 44] = [
    // caret
    ("^1.2.3", "1.2.3", true),
    ("^1.2.3", "1.9.9", true),
    ("^1.2.3", "2.0.0", false),
    ("^1.2.3", "1.2.2", false),
    ("^0.2.3", "0.2.9", true),
    ("^0.2.3", "0.3.0", false),
    ("^0.2.3", "0.2.2", false),
    ("^0.0.3", "0.0.3", true),
    ("^0.0.3", "0.0.4", false),
    ("^1.0.0", "1.0.0-alpha", false),
    ("^1.0.0", "1.0.0+build.7", true),
    ("^1.0.0-alpha", "1.0.0-beta", true),
    ("^1.0.0-beta", "1.0.0-alpha", false),
    ("^1.0.0-alpha", "1.2.0", true),
    // tilde
    ("~1.2.3", "1.2.3", true),
    ("~1.2.3", "1.2.9", true),
    ("~1.2.3", "1.3.0", false),
    ("~1.2.3", "1.2.2", false),
    ("~0.0.1", "0.0.9", true),
    ("~0.0.1", "0.1.0", false),
    ("~1.2.3", "1.2.4-rc.1", false),
    // wildcard
    ("*", "0.0.1", true),
    ("*", "99.99.99", true),
    ("*", "1.0.0-alpha", false),
    ("1.*", "1.0.0", true),
    ("1.*", "1.99.0", true),
    ("1.*", "2.0.0", false),
    ("1.*", "0.9.0", false),
    ("1.2.*", "1.2.7", true),
    ("1.2.*", "1.3.0", false),
    // exact
    ("=1.2.3", "1.2.3", true),
    ("=1.2.3", "1.2.4", false),
    ("=1.0.0", "1.0.0+build.5", true),
    ("=1.0.0-rc.1", "1.0.0-rc.1", true),
    ("=1.0.0-rc.1", "1.0.0", false),
    // ranges and conjunctions
    (">=1.0.0, <2.0.0", "1.5.0", true),
    (">=1.0.0, <2.0.0", "2.0.0", false),
    (">=1.0.0, <2.0.0", "0.9.9", false),
    (">1.0.0", "1.0.1", true),
    (">1.0.0", "1.0.0", false),
    ("<=1.2.3", "1.2.3", true),
    ("<1.2.3", "1.2.3", false),
    (">=1.0.0-alpha, <1.0.0", "1.0.0-beta", true),
    (">=1.2.0, <=1.2.0", "1.2.0", true),
];

const REJECTED: [&str; 9] = [
    "",
    "1.2",
    "1.0.0.0",
    "01.0.0",
    "1.00.0",
    "1.0.0-01",
    "1.0.0-",
    "1.0.0-alpha..1",
    "1.0.0-al_pha",
];

const REJECTED_REQS: [&str; 6] = [
    "",
    "1.0.0",
    "^x",
    ">=2.0.0, <1.0.0",
    ">=1.0.0, <1.0.0",
    "^1.0.0 || ^2.0.0",
];

#[test]
fn hand_vectors_ordering() {
    for (i, a) in ASCENDING.iter().enumerate() {
        for (j, b) in ASCENDING.iter().enumerate() {
            let va = Version::parse(a).unwrap();
            let vb = Version::parse(b).unwrap();
            let expected = i.cmp(&j);
            assert_eq!(
                va.cmp_precedence(&vb),
                expected,
                "precedence of {a} vs {b}"
            );
        }
    }
    for (a, b, expected) in ORDER_PAIRS {
        let va = Version::parse(a).unwrap();
        let vb = Version::parse(b).unwrap();
        assert_eq!(va.cmp_precedence(&vb), expected, "precedence of {a} vs {b}");
        assert_eq!(
            vb.cmp_precedence(&va),
            expected.reverse(),
            "precedence of {b} vs {a}"
        );
    }
}

#[test]
fn hand_vectors_matching() {
    for (req_text, version_text, expected) in MATCH_VECTORS {
        let req = VersionReq::parse(req_text).unwrap();
        let version = Version::parse(version_text).unwrap();
        assert_eq!(
            req.matches(&version),
            expected,
            "{req_text} vs {version_text}"
        );
    }
}

#[test]
fn hand_vectors_rejections() {
    for text in REJECTED {
        assert!(Version::parse(text).is_err(), "{text:?} should not parse");
    }
    for text in REJECTED_REQS {
        assert!(
            VersionReq::parse(text).is_err(),
            "{text:?} should not parse as a requirement"
        );
    }
}

#[test]
fn best_match_vectors() {
    let pool = |texts: &[&str]| -> Vec<Version> {
        texts.iter().map(|t| Version::parse(t).unwrap()).collect()
    };
    let cases: [(&str, &[&str], Option<&str>); 4] = [
        ("^1.0.0", &["1.0.0", "1.2.0", "2.0.0"], Some("1.2.0")),
        ("*", &["1.0.0", "1.0.0+b"], Some("1.0.0+b")),
        ("~1.0.0", &["1.0.5", "1.1.0"], Some("1.0.5")),
        ("^3.0.0", &["1.0.0", "2.9.9"], None),
    ];
    for (req_text, pool_texts, expected) in cases {
        let req = VersionReq::parse(req_text).unwrap();
        let versions = pool(pool_texts);
        let got = best_match(&req, versions.iter()).map(|v| v.to_string());
        assert_eq!(got.as_deref(), expected, "best_match for {req_text}");
    }
}

// ---------------------------------------------------------------------------
// Rule-transcription oracle over a bounded lattice.

#[derive(Debug, Clone, PartialEq, Eq)]
enum Pid {
    N(u64),
    A(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct V {
    core: (u64, u64, u64),
    pre: Vec<Pid>,
}

impl V {
    fn release(core: (u64, u64, u64)) -> V {
        V {
            core,
            pre: Vec::new(),
        }
    }

    fn text(&self) -> String {
        let mut s = format!("{}.{}.{}", self.core.0, self.core.1, self.core.2);
        if !self.pre.is_empty() {
            s.push('-');
            let parts: Vec<String> = self
                .pre
                .iter()
                .map(|p| match p {
                    Pid::N(n) => n.to_string(),
                    Pid::A(a) => (*a).to_string(),
                })
                .collect();
            s.push_str(&parts.join("."));
        }
        s
    }
}

fn oracle_cmp(a: &V, b: &V) -> Ordering {
    match a.core.cmp(&b.core) {
        Ordering::Equal => {}
        other => return other,
    }
    match (a.pre.is_empty(), b.pre.is_empty()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        (false, false) => {}
    }
    for (x, y) in a.pre.iter().zip(&b.pre) {
        let step = match (x, y) {
            (Pid::N(m), Pid::N(n)) => m.cmp(n),
            (Pid::N(_), Pid::A(_)) => Ordering::Less,
            (Pid::A(_), Pid::N(_)) => Ordering::Greater,
            (Pid::A(p), Pid::A(q)) => p.cmp(q),
        };
        if step != Ordering::Equal {
            return step;
        }
    }
    a.pre.len().cmp(&b.pre.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Ge,
    Gt,
    Le,
    Lt,
}

#[derive(Debug, Clone)]
enum RF {
    Exact(V),
    Caret(V),
    Tilde(V),
    Star,
    Major(u64),
    MajorMinor(u64, u64),
    Range(Vec<(Op, V)>),
}

impl RF {
    fn text(&self) -> String {
        match self {
            RF::Exact(v) => format!("={}", v.text()),
            RF::Caret(v) => format!("^{}", v.text()),
            RF::Tilde(v) => format!("~{}", v.text()),
            RF::Star => "*".to_string(),
            RF::Major(m) => format!("{m}.*"),
            RF::MajorMinor(m, n) => format!("{m}.{n}.*"),
            RF::Range(comps) => comps
                .iter()
                .map(|(op, v)| {
                    let op = match op {
                        Op::Ge => ">=",
                        Op::Gt => ">",
                        Op::Le => "<=",
                        Op::Lt => "<",
                    };
                    format!("{op}{}", v.text())
                })
                .collect::<Vec<_>>()
                .join(", "),
        }
    }

    fn names_prerelease(&self) -> bool {
        match self {
            RF::Exact(v) | RF::Caret(v) | RF::Tilde(v) => !v.pre.is_empty(),
            RF::Star | RF::Major(_) | RF::MajorMinor(_, _) => false,
            RF::Range(comps) => comps.iter().any(|(_, v)| !v.pre.is_empty()),
        }
    }

    /// Direct transcription of the matching rules: the prerelease gate,
    /// then interval membership per requirement form.
    fn matches(&self, v: &V) -> bool {
        if !v.pre.is_empty() && !self.names_prerelease() {
            return false;
        }
        let below = |v: &V, bound: V| oracle_cmp(v, &bound) == Ordering::Less;
        match self {
            RF::Exact(e) => oracle_cmp(v, e) == Ordering::Equal,
            RF::Caret(c) => {
                if oracle_cmp(v, c) == Ordering::Less {
                    return false;
                }
                let upper = if c.core.0 > 0 {
                    (c.core.0 + 1, 0, 0)
                } else if c.core.1 > 0 {
                    (0, c.core.1 + 1, 0)
                } else {
                    (0, 0, c.core.2 + 1)
                };
                below(v, V::release(upper))
            }
            RF::Tilde(t) => {
                oracle_cmp(v, t) != Ordering::Less
                    && below(v, V::release((t.core.0, t.core.1 + 1, 0)))
            }
            RF::Star => true,
            RF::Major(m) => {
                oracle_cmp(v, &V::release((*m, 0, 0))) != Ordering::Less
                    && below(v, V::release((m + 1, 0, 0)))
            }
            RF::MajorMinor(m, n) => {
                oracle_cmp(v, &V::release((*m, *n, 0))) != Ordering::Less
                    && below(v, V::release((*m, n + 1, 0)))
            }
            RF::Range(comps) => comps.iter().all(|(op, c)| {
                let ord = oracle_cmp(v, c);
                match op {
                    Op::Ge => ord != Ordering::Less,
                    Op::Gt => ord == Ordering::Greater,
                    Op::Le => ord != Ordering::Greater,
                    Op::Lt => ord == Ordering::Less,
                }
            }),
        }
    }
}

fn lattice_versions() -> Vec<V> {
    let prereleases: Vec<Vec<Pid>> = vec![
        vec![],
        vec![Pid::A("alpha")],
        vec![Pid::A("alpha"), Pid::N(1)],
        vec![Pid::N(1)],
        vec![Pid::A("beta")],
    ];
    let mut out = Vec::new();
    for major in 0..=2u64 {
        for minor in 0..=2u64 {
            for patch in 0..=2u64 {
                for pre in &prereleases {
                    out.push(V {
                        core: (major, minor, patch),
                        pre: pre.clone(),
                    });
                }
            }
        }
    }
    out
}

#[test]
fn lattice_ordering_matches_oracle() {
    let versions = lattice_versions();
    let parsed: Vec<Version> = versions
        .iter()
        .map(|v| Version::parse(&v.text()).unwrap())
        .collect();
    for (i, a) in versions.iter().enumerate() {
        assert_eq!(parsed[i].to_string(), a.text(), "display round-trip");
        for (j, b) in versions.iter().enumerate() {
            assert_eq!(
                parsed[i].cmp_precedence(&parsed[j]),
                oracle_cmp(a, b),
                "{} vs {}",
                a.text(),
                b.text()
            );
        }
    }
}

#[test]
fn lattice_matching_matches_oracle() {
    let versions = lattice_versions();
    let mut reqs: Vec<RF> = Vec::new();
    for v in &versions {
        reqs.push(RF::Exact(v.clone()));
        reqs.push(RF::Caret(v.clone()));
        reqs.push(RF::Tilde(v.clone()));
    }
    reqs.push(RF::Star);
    for m in 0..=2 {
        reqs.push(RF::Major(m));
        for n in 0..=2 {
            reqs.push(RF::MajorMinor(m, n));
        }
    }
    // Two-sided ranges with a nonempty interior, plus one-sided ones.
    let lo = V::release((0, 1, 0));
    let hi = V::release((2, 0, 0));
    let pre_lo = V {
        core: (1, 0, 0),
        pre: vec![Pid::A("alpha")],
    };
    let pre_hi = V::release((1, 0, 0));
    reqs.push(RF::Range(vec![(Op::Ge, lo.clone()), (Op::Lt, hi.clone())]));
    reqs.push(RF::Range(vec![(Op::Gt, lo.clone()), (Op::Le, hi.clone())]));
    reqs.push(RF::Range(vec![(Op::Ge, pre_lo), (Op::Lt, pre_hi)]));
    reqs.push(RF::Range(vec![(Op::Gt, lo)]));
    reqs.push(RF::Range(vec![(Op::Le, hi)]));

    let mut checked = 0u64;
    for rf in &reqs {
        let text = rf.text();
        let req = VersionReq::parse(&text)
            .unwrap_or_else(|e| panic!("{text}: {e}"));
        let redisplayed = VersionReq::parse(&req.to_string())
            .unwrap_or_else(|e| panic!("redisplay of {text}: {e}"));
        for v in &versions {
            let version = Version::parse(&v.text()).unwrap();
            let expected = rf.matches(v);
            assert_eq!(
                req.matches(&version),
                expected,
                "{text} vs {}",
                v.text()
            );
            assert_eq!(
                redisplayed.matches(&version),
                expected,
                "redisplayed {text} vs {}",
                v.text()
            );
            checked += 1;
        }
    }
    assert!(checked > 50_000, "lattice should be substantial, got {checked}");
}
