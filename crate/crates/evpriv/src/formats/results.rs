//! Localization results CSV: `query_id,t_err,r_err,correct`.

use std::fmt::Write as _;

use evpriv_core::localization::QueryResult;

pub const RESULTS_HEADER: &str = "query_id,t_err,r_err,correct";

fn num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

pub fn results_csv(results: &[QueryResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(out, "{},{},{},{}", r.query_id, num(r.error.t_error), num(r.error.r_error), u8::from(r.correct));
    }
    out
}
