use std::fmt::Write as _;

use super::{EvalReport, FailureMode};

const MULTI_LABEL_NOTE: &str =
    "A failed record counts once for every criterion it misses, so failure percentages can sum to more than 100%.";

fn pct(n: usize, d: usize) -> String {
    if d == 0 {
        "0.00%".into()
    } else {
        format!("{:.2}%", 100.0 * n as f64 / d as f64)
    }
}

fn join(prefix: &str, path: &str) -> String {
    if prefix.is_empty() || path.is_empty() {
        path.to_string()
    } else {
        format!("{}/{}", prefix.trim_end_matches('/'), path)
    }
}

fn failure_rows(r: &EvalReport) -> impl Iterator<Item = (FailureMode, usize)> + '_ {
    FailureMode::ALL.into_iter().filter_map(|m| r.failures.get(&m).map(|&n| (m, n))).filter(|(_, n)| *n > 0)
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

/// Markdown report. Screenshot links are resolved against `image_root`.
pub fn render_markdown(r: &EvalReport, image_root: &str) -> String {
    let mut s = String::from("# Swipe evaluation report\n\n");
    let _ = writeln!(s, "| records | successes | accuracy |\n|---:|---:|---:|");
    let _ = writeln!(s, "| {} | {} | {} |\n", r.total, r.successes, pct(r.successes, r.total));

    s.push_str("## Accuracy per app\n\n| app | records | successes | accuracy |\n|---|---:|---:|---:|\n");
    for (app, st) in &r.per_app {
        let _ = writeln!(s, "| {} | {} | {} | {} |", md_cell(app), st.total, st.successes, pct(st.successes, st.total));
    }

    s.push_str("\n## Failure modes\n\n| failure | records | share |\n|---|---:|---:|\n");
    for (m, n) in failure_rows(r) {
        let _ = writeln!(s, "| {} | {} | {} |", m.as_str(), n, pct(n, r.total));
    }
    let _ = writeln!(s, "\n{MULTI_LABEL_NOTE}\n");

    s.push_str("## Records\n\n| id | app | command | result | failures | before | after |\n|---|---|---|---|---|---|---|\n");
    for rec in &r.records {
        let failures: Vec<&str> = rec.failures.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | [before]({}) | [after]({}) |",
            md_cell(&rec.id),
            md_cell(&rec.app),
            md_cell(&rec.command),
            if rec.success { "pass" } else { "fail" },
            failures.join(", "),
            join(image_root, &rec.screen_before),
            join(image_root, &rec.screen_after),
        );
    }
    s
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Static HTML report with a screenshot gallery for manual review.
pub fn render_html(r: &EvalReport, image_root: &str) -> String {
    let mut s = String::from(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Swipe evaluation report</title>\n\
         <style>body{font-family:sans-serif;margin:2em}table{border-collapse:collapse;margin-bottom:1.5em}\
         td,th{border:1px solid #ccc;padding:4px 8px}img{max-height:240px}.fail{color:#b00}.pass{color:#070}</style>\n\
         </head>\n<body>\n<h1>Swipe evaluation report</h1>\n",
    );
    let _ = writeln!(
        s,
        "<table id=\"summary\"><tr><th>records</th><th>successes</th><th>accuracy</th></tr>\
         <tr><td>{}</td><td>{}</td><td>{}</td></tr></table>",
        r.total,
        r.successes,
        pct(r.successes, r.total)
    );
    s.push_str("<h2>Accuracy per app</h2>\n<table id=\"apps\"><tr><th>app</th><th>records</th><th>successes</th><th>accuracy</th></tr>\n");
    for (app, st) in &r.per_app {
        let _ = writeln!(
            s,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            esc(app),
            st.total,
            st.successes,
            pct(st.successes, st.total)
        );
    }
    s.push_str("</table>\n<h2>Failure modes</h2>\n<table id=\"failures\"><tr><th>failure</th><th>records</th><th>share</th></tr>\n");
    for (m, n) in failure_rows(r) {
        let _ = writeln!(s, "<tr><td>{}</td><td>{}</td><td>{}</td></tr>", m.as_str(), n, pct(n, r.total));
    }
    let _ = writeln!(s, "</table>\n<p><small>{}</small></p>", esc(MULTI_LABEL_NOTE));
    s.push_str("<h2>Records</h2>\n<table id=\"records\"><tr><th>id</th><th>app</th><th>command</th><th>result</th><th>failures</th><th>before</th><th>after</th></tr>\n");
    for rec in &r.records {
        let failures: Vec<&str> = rec.failures.iter().map(|m| m.as_str()).collect();
        let (cls, word) = if rec.success { ("pass", "pass") } else { ("fail", "fail") };
        let before = esc(&join(image_root, &rec.screen_before));
        let after = esc(&join(image_root, &rec.screen_after));
        let _ = writeln!(
            s,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td class=\"{cls}\">{word}</td><td>{}</td>\
             <td><a href=\"{before}\"><img src=\"{before}\" alt=\"before\"></a></td>\
             <td><a href=\"{after}\"><img src=\"{after}\" alt=\"after\"></a></td></tr>",
            esc(&rec.id),
            esc(&rec.app),
            esc(&rec.command),
            failures.join(", "),
        );
    }
    s.push_str("</table>\n</body>\n</html>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn empty_report_renders() {
        let r = EvalReport::default();
        let md = render_markdown(&r, "");
        assert!(md.contains("| 0 | 0 | 0.00% |"));
        let html = render_html(&r, "");
        assert!(html.starts_with("<!DOCTYPE html>") && html.ends_with("</html>\n"));
        assert_eq!(html.matches("<tr>").count(), 5);
    }

    #[test]
    fn one_row_per_failure_class() {
        let r = EvalReport {
            total: 4,
            failures: BTreeMap::from([
                (FailureMode::Direction, 3),
                (FailureMode::Duration, 2),
                (FailureMode::StartDistance, 1),
            ]),
            ..Default::default()
        };
        let md = render_markdown(&r, "");
        let section = md.split("## Failure modes").nth(1).unwrap().split("##").next().unwrap();
        assert_eq!(section.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| failure")).count(), 3);
        assert!(md.contains("| direction | 3 | 75.00% |"));
        assert!(md.contains("more than 100%"));
        let html = render_html(&r, "");
        let table = html.split("id=\"failures\"").nth(1).unwrap().split("</table>").next().unwrap();
        assert_eq!(table.matches("<tr>").count(), 4);
    }

    #[test]
    fn escaping_and_links() {
        assert_eq!(esc("<a&\"b\">"), "&lt;a&amp;&quot;b&quot;&gt;");
        assert_eq!(join("data/", "screens/x.png"), "data/screens/x.png");
        assert_eq!(join("", "screens/x.png"), "screens/x.png");
    }
}
