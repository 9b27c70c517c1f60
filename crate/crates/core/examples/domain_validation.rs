//! The two built-in m-type domains: active translates, the cell map that
//! sends boundary translates to interior cells, and exhaustive validation.
//!
//! cargo run --release --example domain_validation

use mixrec::domain::{cell_map_nu, enumerate_n, validate_mtype, MType, MTypeDomain};
use mixrec::indexkit::MultiIndex;

fn main() -> mixrec::Result<()> {
    let m = MultiIndex::new(vec![2, 2]);
    for dom in [MTypeDomain::cube(m.clone()), MTypeDomain::lshape(m.clone())] {
        println!("{}: kappa0 {}, volume {}", dom.label(), dom.kappa0(), dom.volume());
        let level = [1u32, 1];
        let n = enumerate_n(&dom, &level);
        println!("  {} active translates at level {level:?}", n.len());
        for nu in n.iter().take(6) {
            println!("    nu {nu:?} -> cell {:?}", cell_map_nu(&dom, &level, nu)?);
        }
        for kmax in [2, 4] {
            let t = std::time::Instant::now();
            let rep = validate_mtype(&dom, kmax)?;
            println!(
                "  validation up to level {kmax}: {} ({} levels, {} translates, {} checks, {:.1?})",
                if rep.passed() { "pass" } else { "FAIL" },
                rep.levels,
                rep.translates,
                rep.checks,
                t.elapsed()
            );
            if let Some(v) = &rep.violation {
                println!("    {v}");
            }
        }
    }
    Ok(())
}
