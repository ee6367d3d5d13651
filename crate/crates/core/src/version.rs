//! Semantic versions and version-range requirements.
//!
//! Versions follow semver 2.0.0: precedence compares (major, minor, patch,
//! prerelease) and ignores build metadata. Requirements cover the subset
//! `=X.Y.Z`, `^X.Y.Z`, `~X.Y.Z`, trailing wildcards (`*`, `1.*`, `1.2.*`),
//! and comma-conjoined comparators (`>=1.0.0,<2.0.0`).
//!
//! Prerelease versions are excluded from every match unless the requirement
//! itself names a prerelease somewhere; then ordinary bound checks apply.

use std::cmp::Ordering;
use std::fmt;

use crate::Error;

/// One dot-separated prerelease identifier. Numeric identifiers compare by
/// value and sort below alphanumeric ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PreId {
    Numeric(u64),
    Alpha(String),
}

impl fmt::Display for PreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreId::Numeric(n) => write!(f, "{n}"),
            PreId::Alpha(s) => f.write_str(s),
        }
    }
}

/// A semver 2.0.0 version. `build` is empty when absent and never affects
/// precedence; the total `Ord` breaks precedence ties on it so versions can
/// key ordered maps deterministically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Version {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
    pub prerelease: Vec<PreId>,
    pub build: String,
}

impl Version {
    pub fn new(major: u64, minor: u64, patch: u64) -> Version {
        Version {
            major,
            minor,
            patch,
            prerelease: Vec::new(),
            build: String::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Version, Error> {
        let fail = |message: String| Error::VersionParse {
            text: text.to_string(),
            message,
        };
        let (rest, build) = match text.split_once('+') {
            Some((head, tail)) => (head, tail),
            None => (text, ""),
        };
        let (core, pre) = match rest.split_once('-') {
            Some((head, tail)) => (head, Some(tail)),
            None => (rest, None),
        };
        let fields: Vec<&str> = core.split('.').collect();
        if fields.len() != 3 {
            return Err(fail(format!(
                "expected major.minor.patch, found {} field(s)",
                fields.len()
            )));
        }
        let major = parse_numeric_field(fields[0]).map_err(&fail)?;
        let minor = parse_numeric_field(fields[1]).map_err(&fail)?;
        let patch = parse_numeric_field(fields[2]).map_err(&fail)?;
        let mut prerelease = Vec::new();
        if let Some(pre) = pre {
            for ident in pre.split('.') {
                prerelease.push(parse_pre_identifier(ident).map_err(&fail)?);
            }
        }
        if !build.is_empty() || text.ends_with('+') {
            for ident in build.split('.') {
                check_build_identifier(ident).map_err(&fail)?;
            }
        }
        Ok(Version {
            major,
            minor,
            patch,
            prerelease,
            build: build.to_string(),
        })
    }

    /// Semver precedence: build metadata ignored.
    pub fn cmp_precedence(&self, other: &Version) -> Ordering {
        (self.major, self.minor, self.patch)
            .cmp(&(other.major, other.minor, other.patch))
            .then_with(|| {
                match (self.prerelease.is_empty(), other.prerelease.is_empty()) {
                    (true, true) => Ordering::Equal,
                    // A release sorts above any prerelease of the same core.
                    (true, false) => Ordering::Greater,
                    (false, true) => Ordering::Less,
                    (false, false) => cmp_prerelease(&self.prerelease, &other.prerelease),
                }
            })
    }
}

fn parse_numeric_field(s: &str) -> Result<u64, String> {
    if s.is_empty() {
        return Err("empty numeric field".to_string());
    }
    if !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("non-digit in numeric field {s:?}"));
    }
    if s.len() > 1 && s.starts_with('0') {
        return Err(format!("leading zero in {s:?}"));
    }
    s.parse::<u64>()
        .map_err(|_| format!("number out of range in {s:?}"))
}

fn parse_pre_identifier(s: &str) -> Result<PreId, String> {
    if s.is_empty() {
        return Err("empty prerelease identifier".to_string());
    }
    if !s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
        return Err(format!("illegal character in prerelease identifier {s:?}"));
    }
    if s.bytes().all(|b| b.is_ascii_digit()) {
        if s.len() > 1 && s.starts_with('0') {
            return Err(format!("leading zero in {s:?}"));
        }
        return s
            .parse::<u64>()
            .map(PreId::Numeric)
            .map_err(|_| format!("number out of range in {s:?}"));
    }
    Ok(PreId::Alpha(s.to_string()))
}

fn check_build_identifier(s: &str) -> Result<(), String> {
    if s.is_empty() {
        return Err("empty build identifier".to_string());
    }
    if !s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-') {
        return Err(format!("illegal character in build identifier {s:?}"));
    }
    Ok(())
}

fn cmp_prerelease(a: &[PreId], b: &[PreId]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = match (x, y) {
            (PreId::Numeric(m), PreId::Numeric(n)) => m.cmp(n),
            (PreId::Numeric(_), PreId::Alpha(_)) => Ordering::Less,
            (PreId::Alpha(_), PreId::Numeric(_)) => Ordering::Greater,
            (PreId::Alpha(s), PreId::Alpha(t)) => s.cmp(t),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    // Equal prefix: the longer identifier list wins.
    a.len().cmp(&b.len())
}

impl Ord for Version {
    fn cmp(&self, other: &Version) -> Ordering {
        self.cmp_precedence(other)
            .then_with(|| self.build.cmp(&other.build))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Version) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)?;
        if !self.prerelease.is_empty() {
            let idents: Vec<String> = self.prerelease.iter().map(|p| p.to_string()).collect();
            write!(f, "-{}", idents.join("."))?;
        }
        if !self.build.is_empty() {
            write!(f, "+{}", self.build)?;
        }
        Ok(())
    }
}

/// Comparison operator inside a range requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparator {
    pub op: CmpOp,
    pub version: Version,
}

/// The surface form a requirement was written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReqKind {
    Exact(Version),
    Caret(Version),
    Tilde(Version),
    Wildcard {
        major: Option<u64>,
        minor: Option<u64>,
    },
    Range(Vec<Comparator>),
}

/// A version-range requirement. Bounds are derived from the kind at parse
/// time; a bound is `(version, inclusive)` compared by precedence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionReq {
    pub kind: ReqKind,
    pub lower: Option<(Version, bool)>,
    pub upper: Option<(Version, bool)>,
}

impl VersionReq {
    /// Matches every non-prerelease version.
    pub fn any() -> VersionReq {
        VersionReq::from_kind(ReqKind::Wildcard {
            major: None,
            minor: None,
        })
    }

    pub fn exact(v: &Version) -> VersionReq {
        VersionReq::from_kind(ReqKind::Exact(v.clone()))
    }

    fn from_kind(kind: ReqKind) -> VersionReq {
        let (lower, upper) = derive_bounds(&kind);
        VersionReq { kind, lower, upper }
    }

    pub fn parse(text: &str) -> Result<VersionReq, Error> {
        let fail = |message: String| Error::ReqParse {
            text: text.to_string(),
            message,
        };
        let t = text.trim();
        if t.is_empty() {
            return Err(fail("empty requirement".to_string()));
        }
        if t.contains("||") {
            return Err(fail("alternation is not supported".to_string()));
        }
        let kind = if t == "*" {
            ReqKind::Wildcard {
                major: None,
                minor: None,
            }
        } else if t.contains(',') {
            let mut comparators = Vec::new();
            for part in t.split(',') {
                comparators.push(parse_comparator(part.trim()).map_err(&fail)?);
            }
            ReqKind::Range(comparators)
        } else if let Some(rest) = t.strip_prefix('^') {
            ReqKind::Caret(Version::parse(rest.trim_start()).map_err(reword(&fail))?)
        } else if let Some(rest) = t.strip_prefix('~') {
            ReqKind::Tilde(Version::parse(rest.trim_start()).map_err(reword(&fail))?)
        } else if t.starts_with('=') || t.starts_with('>') || t.starts_with('<') {
            let c = parse_comparator(t).map_err(&fail)?;
            match c.op {
                CmpOp::Eq => ReqKind::Exact(c.version),
                _ => ReqKind::Range(vec![c]),
            }
        } else if t.contains('*') {
            parse_wildcard(t).map_err(&fail)?
        } else {
            return Err(fail(
                "missing operator (write =X.Y.Z for an exact match)".to_string(),
            ));
        };
        let req = VersionReq::from_kind(kind);
        if req.is_empty() {
            return Err(fail("empty range".to_string()));
        }
        Ok(req)
    }

    /// True when the derived bounds provably exclude every version.
    pub fn is_empty(&self) -> bool {
        if let (Some((lo, lo_incl)), Some((hi, hi_incl))) = (&self.lower, &self.upper) {
            match lo.cmp_precedence(hi) {
                Ordering::Greater => true,
                Ordering::Equal => !(*lo_incl && *hi_incl),
                Ordering::Less => false,
            }
        } else {
            false
        }
    }

    /// True when the requirement names a prerelease anywhere; only then are
    /// prerelease versions eligible to match.
    pub fn allows_prerelease(&self) -> bool {
        match &self.kind {
            ReqKind::Exact(v) | ReqKind::Caret(v) | ReqKind::Tilde(v) => !v.prerelease.is_empty(),
            ReqKind::Wildcard { .. } => false,
            ReqKind::Range(cs) => cs.iter().any(|c| !c.version.prerelease.is_empty()),
        }
    }

    pub fn matches(&self, v: &Version) -> bool {
        if !v.prerelease.is_empty() && !self.allows_prerelease() {
            return false;
        }
        if let Some((lo, inclusive)) = &self.lower {
            match v.cmp_precedence(lo) {
                Ordering::Less => return false,
                Ordering::Equal if !inclusive => return false,
                _ => {}
            }
        }
        if let Some((hi, inclusive)) = &self.upper {
            match v.cmp_precedence(hi) {
                Ordering::Greater => return false,
                Ordering::Equal if !inclusive => return false,
                _ => {}
            }
        }
        true
    }
}

fn reword<'a>(fail: &'a dyn Fn(String) -> Error) -> impl Fn(Error) -> Error + 'a {
    move |e| match e {
        Error::VersionParse { message, .. } => fail(message),
        other => other,
    }
}

fn parse_comparator(part: &str) -> Result<Comparator, String> {
    let (op, rest) = if let Some(rest) = part.strip_prefix(">=") {
        (CmpOp::Ge, rest)
    } else if let Some(rest) = part.strip_prefix("<=") {
        (CmpOp::Le, rest)
    } else if let Some(rest) = part.strip_prefix('>') {
        (CmpOp::Gt, rest)
    } else if let Some(rest) = part.strip_prefix('<') {
        (CmpOp::Lt, rest)
    } else if let Some(rest) = part.strip_prefix('=') {
        (CmpOp::Eq, rest)
    } else {
        return Err(format!("missing comparator operator in {part:?}"));
    };
    let version = Version::parse(rest.trim_start()).map_err(|e| match e {
        Error::VersionParse { message, .. } => message,
        other => other.to_string(),
    })?;
    Ok(Comparator { op, version })
}

fn parse_wildcard(t: &str) -> Result<ReqKind, String> {
    let fields: Vec<&str> = t.split('.').collect();
    match fields.as_slice() {
        [major, "*"] => Ok(ReqKind::Wildcard {
            major: Some(parse_numeric_field(major)?),
            minor: None,
        }),
        [major, minor, "*"] => Ok(ReqKind::Wildcard {
            major: Some(parse_numeric_field(major)?),
            minor: Some(parse_numeric_field(minor)?),
        }),
        _ => Err("wildcard is only allowed as the trailing field".to_string()),
    }
}

fn derive_bounds(kind: &ReqKind) -> (Option<(Version, bool)>, Option<(Version, bool)>) {
    match kind {
        ReqKind::Exact(v) => (Some((v.clone(), true)), Some((v.clone(), true))),
        ReqKind::Caret(v) => {
            let upper = if v.major > 0 {
                Version::new(v.major + 1, 0, 0)
            } else if v.minor > 0 {
                Version::new(0, v.minor + 1, 0)
            } else {
                Version::new(0, 0, v.patch + 1)
            };
            (Some((v.clone(), true)), Some((upper, false)))
        }
        ReqKind::Tilde(v) => (
            Some((v.clone(), true)),
            Some((Version::new(v.major, v.minor + 1, 0), false)),
        ),
        ReqKind::Wildcard { major, minor } => match (major, minor) {
            (None, _) => (None, None),
            (Some(m), None) => (
                Some((Version::new(*m, 0, 0), true)),
                Some((Version::new(*m + 1, 0, 0), false)),
            ),
            (Some(m), Some(n)) => (
                Some((Version::new(*m, *n, 0), true)),
                Some((Version::new(*m, *n + 1, 0), false)),
            ),
        },
        ReqKind::Range(comparators) => {
            let mut lower: Option<(Version, bool)> = None;
            let mut upper: Option<(Version, bool)> = None;
            for c in comparators {
                let lo = match c.op {
                    CmpOp::Ge | CmpOp::Eq => Some((c.version.clone(), true)),
                    CmpOp::Gt => Some((c.version.clone(), false)),
                    _ => None,
                };
                let hi = match c.op {
                    CmpOp::Le | CmpOp::Eq => Some((c.version.clone(), true)),
                    CmpOp::Lt => Some((c.version.clone(), false)),
                    _ => None,
                };
                if let Some(lo) = lo {
                    lower = Some(match lower {
                        None => lo,
                        Some(cur) => tighter_lower(cur, lo),
                    });
                }
                if let Some(hi) = hi {
                    upper = Some(match upper {
                        None => hi,
                        Some(cur) => tighter_upper(cur, hi),
                    });
                }
            }
            (lower, upper)
        }
    }
}

fn tighter_lower(a: (Version, bool), b: (Version, bool)) -> (Version, bool) {
    match a.0.cmp_precedence(&b.0) {
        Ordering::Greater => a,
        Ordering::Less => b,
        // Same version: exclusive is the tighter lower bound.
        Ordering::Equal => {
            if a.1 {
                b
            } else {
                a
            }
        }
    }
}

fn tighter_upper(a: (Version, bool), b: (Version, bool)) -> (Version, bool) {
    match a.0.cmp_precedence(&b.0) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if a.1 {
                b
            } else {
                a
            }
        }
    }
}

impl fmt::Display for VersionReq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ReqKind::Exact(v) => write!(f, "={v}"),
            ReqKind::Caret(v) => write!(f, "^{v}"),
            ReqKind::Tilde(v) => write!(f, "~{v}"),
            ReqKind::Wildcard { major, minor } => match (major, minor) {
                (None, _) => f.write_str("*"),
                (Some(m), None) => write!(f, "{m}.*"),
                (Some(m), Some(n)) => write!(f, "{m}.{n}.*"),
            },
            ReqKind::Range(comparators) => {
                let parts: Vec<String> = comparators
                    .iter()
                    .map(|c| format!("{}{}", c.op, c.version))
                    .collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Highest candidate satisfying `req` by precedence; precedence ties are
/// broken by build metadata so the result is deterministic.
pub fn best_match<'a, I>(req: &VersionReq, candidates: I) -> Option<Version>
where
    I: IntoIterator<Item = &'a Version>,
{
    candidates
        .into_iter()
        .filter(|v| req.matches(v))
        .max()
        .cloned()
}
