use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{chi_square_2x2, mann_whitney_u, median, ContingencyTable2x2, Embedding2D, StatResult};
use crate::corpus::{percent, DomainLabel};
use crate::eval::fmt_num;
use crate::practices::DomainProfile;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdoptionRow {
    pub domain: DomainLabel,
    pub adopted: u64,
    pub not_adopted: u64,
    /// Share of the domain's repositories using automation, in percent.
    pub percent_adopted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefactoringRow {
    pub domain: DomainLabel,
    pub refactoring_commits: u64,
    pub non_refactoring_commits: u64,
    pub percent_refactoring: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OwnershipRow {
    pub domain: DomainLabel,
    pub repositories: usize,
    pub median_ownership_ratio: f64,
    pub median_major_contributors: f64,
    pub median_total_contributors: f64,
}

/// One hypothesis test. One-vs-rest tests use `None` for `domain_b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRow {
    pub test: &'static str,
    pub domain_a: DomainLabel,
    pub domain_b: Option<DomainLabel>,
    pub result: StatResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub adoption: Vec<AdoptionRow>,
    pub adoption_total: (u64, u64),
    pub refactoring: Vec<RefactoringRow>,
    pub refactoring_total: (u64, u64),
    pub ownership: Vec<OwnershipRow>,
    pub tests: Vec<TestRow>,
    /// Conditions that suppressed some output, e.g. a single domain.
    pub flags: Vec<String>,
}

/// Builds adoption and refactoring tables, ownership medians, pairwise
/// Mann-Whitney tests on the ownership ratio, and one-vs-rest chi-square
/// tests (continuity corrected) for adoption and refactoring.
pub fn domain_comparison_report(profiles: &[DomainProfile]) -> ComparisonReport {
    let mut by_domain: BTreeMap<DomainLabel, Vec<&DomainProfile>> = BTreeMap::new();
    for p in profiles {
        by_domain.entry(p.domain).or_default().push(p);
    }
    let mut flags = Vec::new();

    let adoption: Vec<AdoptionRow> = by_domain
        .iter()
        .map(|(&domain, ps)| {
            let adopted = ps.iter().filter(|p| p.profile.uses_automation).count();
            AdoptionRow {
                domain,
                adopted: adopted as u64,
                not_adopted: (ps.len() - adopted) as u64,
                percent_adopted: percent(adopted, ps.len()),
            }
        })
        .collect();
    let adoption_total = adoption.iter().fold((0, 0), |(a, b), r| (a + r.adopted, b + r.not_adopted));

    let refactoring: Vec<RefactoringRow> = by_domain
        .iter()
        .map(|(&domain, ps)| {
            let r: u64 = ps.iter().map(|p| p.profile.refactoring_commits).sum();
            let n: u64 = ps.iter().map(|p| p.profile.non_refactoring_commits).sum();
            RefactoringRow {
                domain,
                refactoring_commits: r,
                non_refactoring_commits: n,
                percent_refactoring: percent(r as usize, (r + n) as usize),
            }
        })
        .collect();
    let refactoring_total = refactoring
        .iter()
        .fold((0, 0), |(a, b), r| (a + r.refactoring_commits, b + r.non_refactoring_commits));

    let ownership = by_domain
        .iter()
        .map(|(&domain, ps)| {
            let col = |f: fn(&DomainProfile) -> f64| median(&ps.iter().map(|p| f(p)).collect::<Vec<_>>()).unwrap_or(0.0);
            OwnershipRow {
                domain,
                repositories: ps.len(),
                median_ownership_ratio: col(|p| p.profile.ownership_ratio),
                median_major_contributors: col(|p| p.profile.major_contributors as f64),
                median_total_contributors: col(|p| p.profile.total_contributors as f64),
            }
        })
        .collect();

    let mut tests = Vec::new();
    if by_domain.len() < 2 {
        flags.push("fewer than two domains: no comparison tests".to_string());
    } else {
        let one_vs_rest = |name: &'static str, rows: Vec<(DomainLabel, u64, u64)>, tests: &mut Vec<TestRow>, flags: &mut Vec<String>| {
            let (ty, tn) = rows.iter().fold((0, 0), |(a, b), r| (a + r.1, b + r.2));
            for &(domain, yes, no) in &rows {
                let t = ContingencyTable2x2::new(yes, no, ty - yes, tn - no);
                match chi_square_2x2(&t, true) {
                    Ok(result) => tests.push(TestRow {
                        test: name,
                        domain_a: domain,
                        domain_b: None,
                        result,
                    }),
                    Err(e) => flags.push(format!("{name} {}: {e}", domain.slug())),
                }
            }
        };
        one_vs_rest(
            "adoption_chi2",
            adoption.iter().map(|r| (r.domain, r.adopted, r.not_adopted)).collect(),
            &mut tests,
            &mut flags,
        );
        one_vs_rest(
            "refactoring_chi2",
            refactoring
                .iter()
                .map(|r| (r.domain, r.refactoring_commits, r.non_refactoring_commits))
                .collect(),
            &mut tests,
            &mut flags,
        );
        let domains: Vec<DomainLabel> = by_domain.keys().copied().collect();
        for (i, &a) in domains.iter().enumerate() {
            for &b in &domains[i + 1..] {
                let x: Vec<f64> = by_domain[&a].iter().map(|p| p.profile.ownership_ratio).collect();
                let y: Vec<f64> = by_domain[&b].iter().map(|p| p.profile.ownership_ratio).collect();
                match mann_whitney_u(&x, &y) {
                    Ok(m) => tests.push(TestRow {
                        test: "ownership_mwu",
                        domain_a: a,
                        domain_b: Some(b),
                        result: m.result,
                    }),
                    Err(e) => flags.push(format!("ownership_mwu {}/{}: {e}", a.slug(), b.slug())),
                }
            }
        }
    }

    ComparisonReport {
        adoption,
        adoption_total,
        refactoring,
        refactoring_total,
        ownership,
        tests,
        flags,
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn adoption_csv(report: &ComparisonReport) -> String {
    let (ty, tn) = report.adoption_total;
    let total = vec![
        "total".to_string(),
        ty.to_string(),
        tn.to_string(),
        fmt_num(percent(ty as usize, (ty + tn) as usize)),
    ];
    csv_string(
        &["domain", "adopted", "not_adopted", "percent_adopted"],
        report
            .adoption
            .iter()
            .map(|r| {
                vec![
                    r.domain.slug().to_string(),
                    r.adopted.to_string(),
                    r.not_adopted.to_string(),
                    fmt_num(r.percent_adopted),
                ]
            })
            .chain(std::iter::once(total)),
    )
}

pub fn refactoring_csv(report: &ComparisonReport) -> String {
    let (ty, tn) = report.refactoring_total;
    let total = vec![
        "total".to_string(),
        ty.to_string(),
        tn.to_string(),
        fmt_num(percent(ty as usize, (ty + tn) as usize)),
    ];
    csv_string(
        &["domain", "refactoring_commits", "non_refactoring_commits", "percent_refactoring"],
        report
            .refactoring
            .iter()
            .map(|r| {
                vec![
                    r.domain.slug().to_string(),
                    r.refactoring_commits.to_string(),
                    r.non_refactoring_commits.to_string(),
                    fmt_num(r.percent_refactoring),
                ]
            })
            .chain(std::iter::once(total)),
    )
}

pub fn ownership_csv(report: &ComparisonReport) -> String {
    csv_string(
        &[
            "domain",
            "repositories",
            "median_ownership_ratio",
            "median_major_contributors",
            "median_total_contributors",
        ],
        report.ownership.iter().map(|r| {
            vec![
                r.domain.slug().to_string(),
                r.repositories.to_string(),
                fmt_num(r.median_ownership_ratio),
                fmt_num(r.median_major_contributors),
                fmt_num(r.median_total_contributors),
            ]
        }),
    )
}

pub fn tests_csv(report: &ComparisonReport) -> String {
    csv_string(
        &["test", "domain_a", "domain_b", "statistic", "p", "effect", "label"],
        report.tests.iter().map(|t| {
            vec![
                t.test.to_string(),
                t.domain_a.slug().to_string(),
                t.domain_b.map_or("rest", |d| d.slug()).to_string(),
                fmt_num(t.result.statistic),
                fmt_num(t.result.p_value),
                fmt_num(t.result.effect_size),
                t.result.effect_label.name().to_string(),
            ]
        }),
    )
}

/// Coordinates paired with the profiles they were computed from, in order.
pub fn tsne_csv(profiles: &[DomainProfile], embedding: &Embedding2D) -> String {
    csv_string(
        &["ref", "domain", "x", "y"],
        profiles.iter().zip(&embedding.points).map(|(p, xy)| {
            vec![
                p.repo.to_string(),
                p.domain.slug().to_string(),
                fmt_num(xy[0]),
                fmt_num(xy[1]),
            ]
        }),
    )
}

impl ComparisonReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Automation adoption");
        for r in &self.adoption {
            let _ = writeln!(
                out,
                "  {:<42} {:>6} {:>6}  {:>5.1}%",
                r.domain.display_name(),
                r.adopted,
                r.not_adopted,
                r.percent_adopted
            );
        }
        let (ty, tn) = self.adoption_total;
        let _ = writeln!(
            out,
            "  {:<42} {:>6} {:>6}  {:>5.1}%",
            "Total",
            ty,
            tn,
            percent(ty as usize, (ty + tn) as usize)
        );
        let _ = writeln!(out, "\nRefactoring commits");
        for r in &self.refactoring {
            let _ = writeln!(
                out,
                "  {:<42} {:>9} {:>9}  {:>5.1}%",
                r.domain.display_name(),
                r.refactoring_commits,
                r.non_refactoring_commits,
                r.percent_refactoring
            );
        }
        let _ = writeln!(out, "\nOwnership (medians)");
        for r in &self.ownership {
            let _ = writeln!(
                out,
                "  {:<42} n={:<5} ratio={:.2} major={} total={}",
                r.domain.display_name(),
                r.repositories,
                r.median_ownership_ratio,
                r.median_major_contributors,
                r.median_total_contributors
            );
        }
        let _ = writeln!(out, "\nTests");
        for t in &self.tests {
            let _ = writeln!(
                out,
                "  {:<17} {:<10} vs {:<10} stat={:.3} p={:.3} effect={:.3} ({})",
                t.test,
                t.domain_a.slug(),
                t.domain_b.map_or("rest", |d| d.slug()),
                t.result.statistic,
                t.result.p_value,
                t.result.effect_size,
                t.result.effect_label.name()
            );
        }
        for f in &self.flags {
            let _ = writeln!(out, "note: {f}");
        }
        out
    }
}
