use std::fs;
use std::path::Path;

use super::{DomainProfile, PracticeProfile, PracticesError};

pub const PROFILE_COLUMNS: [&str; 11] = [
    "ref",
    "domain",
    "refactoring_commits",
    "non_refactoring_commits",
    "total_commits",
    "refactoring_ratio",
    "major_contributors",
    "minor_contributors",
    "total_contributors",
    "ownership_ratio",
    "uses_automation",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PracticesError + '_ {
    move |source| PracticesError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Renders profiles as CSV; reals use the shortest round-trip form.
pub fn profiles_csv(profiles: &[DomainProfile]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROFILE_COLUMNS).expect("in-memory write");
    for p in profiles {
        let f = &p.profile;
        w.write_record([
            p.repo.to_string(),
            p.domain.slug().to_string(),
            f.refactoring_commits.to_string(),
            f.non_refactoring_commits.to_string(),
            f.total_commits.to_string(),
            f.refactoring_ratio.to_string(),
            f.major_contributors.to_string(),
            f.minor_contributors.to_string(),
            f.total_contributors.to_string(),
            f.ownership_ratio.to_string(),
            f.uses_automation.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_profiles(path: &Path, profiles: &[DomainProfile]) -> Result<(), PracticesError> {
    fs::write(path, profiles_csv(profiles)).map_err(io_err(path))
}

pub fn read_profiles(path: &Path) -> Result<Vec<DomainProfile>, PracticesError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, detail: String| PracticesError::Parse {
        path: path.display().to_string(),
        detail: format!("line {line}: {detail}"),
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().ne(PROFILE_COLUMNS.iter().copied()) {
        return Err(parse_err(1, format!("expected header {}", PROFILE_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| field(k).parse::<u64>().map_err(|e| parse_err(line, format!("{}: {e}", PROFILE_COLUMNS[k])));
        let real = |k: usize| field(k).parse::<f64>().map_err(|e| parse_err(line, format!("{}: {e}", PROFILE_COLUMNS[k])));
        let profile = PracticeProfile {
            refactoring_commits: int(2)?,
            non_refactoring_commits: int(3)?,
            total_commits: int(4)?,
            refactoring_ratio: real(5)?,
            major_contributors: int(6)?,
            minor_contributors: int(7)?,
            total_contributors: int(8)?,
            ownership_ratio: real(9)?,
            uses_automation: field(10)
                .parse()
                .map_err(|e| parse_err(line, format!("uses_automation: {e}")))?,
        };
        out.push(DomainProfile {
            repo: field(0).parse().map_err(|e| parse_err(line, format!("ref: {e}")))?,
            domain: field(1).parse().map_err(|e| parse_err(line, format!("domain: {e}")))?,
            profile,
        });
    }
    Ok(out)
}
