#![no_main]

use libfuzzer_sys::fuzz_target;
use oodro::lp::{solve_lp, LinearProgram, LpStatus};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = LinearProgram::from_json(text) else { return };
    if p.num_vars() > 12 || p.num_rows() > 8 {
        return;
    }
    if let Ok(sol) = solve_lp(&p) {
        if sol.status == LpStatus::Optimal {
            let scale = 1.0 + p.rhs().iter().chain(sol.x.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(p.infeasibility(&sol.x) <= 1e-6 * scale);
        }
    }
});
