//! Plain-text serialization of an [`SdpProblem`] for inspection.
//!
//! Layout: a header with sizes, the variable table, the objective, then each
//! LMI and equality as sparse triplets. Matrix triplets list upper-triangle
//! entries in row-major order.

use std::fmt::Write;

use super::SdpProblem;

pub fn dump(p: &SdpProblem) -> String {
    let mut s = String::new();
    let lmis = p.lmis();
    let _ = writeln!(
        s,
        "sdp nvars {} free {} blocks {} lmis {} equalities {}",
        p.nvars(),
        p.free_vars().len(),
        p.psd_blocks().len(),
        lmis.len(),
        p.equalities().len()
    );
    for (name, id) in p.free_vars() {
        let _ = writeln!(s, "free {id} {name}");
    }
    for b in p.psd_blocks() {
        let _ = writeln!(s, "block {} size {} offset {}", b.name, b.size, b.offset);
    }
    let _ = writeln!(s, "objective {}", p.objective().len());
    for (v, c) in p.objective() {
        let _ = writeln!(s, "  {v} {c:.17e}");
    }
    for l in lmis {
        let _ = writeln!(s, "lmi {} size {} terms {}", l.name, l.size, l.terms.len());
        let _ = writeln!(s, "  const {}", l.constant.nnz());
        for &(i, j, v) in l.constant.entries() {
            let _ = writeln!(s, "    {i} {j} {v:.17e}");
        }
        for (var, f) in &l.terms {
            let _ = writeln!(s, "  var {var} {}", f.nnz());
            for &(i, j, v) in f.entries() {
                let _ = writeln!(s, "    {i} {j} {v:.17e}");
            }
        }
    }
    for e in p.equalities() {
        let _ = writeln!(s, "eq {} terms {} rhs {:.17e}", e.name, e.terms.len(), e.rhs);
        for (v, c) in &e.terms {
            let _ = writeln!(s, "  {v} {c:.17e}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymSparse;
    use crate::sdp::Lmi;

    #[test]
    fn dump_lists_everything() {
        let mut p = SdpProblem::new();
        let c = p.add_free("c");
        let b = p.add_psd_block("P", 2);
        p.add_trace_equality(b, 1.0);
        p.set_objective(vec![(c, 1.0)]);
        p.add_lmi(Lmi {
            name: "H".into(),
            size: 2,
            constant: SymSparse::from_triplets(2, [(0, 1, 1.0)]),
            terms: vec![(c, SymSparse::from_triplets(2, [(0, 0, -1.0), (1, 1, -1.0)]))],
        })
        .unwrap();
        let text = dump(&p);
        assert!(text.starts_with("sdp nvars 4 free 1 blocks 1 lmis 1 equalities 1\n"));
        assert!(text.contains("block P size 2 offset 1"));
        assert!(text.contains("lmi H size 2 terms 1"));
        assert!(text.contains("eq trace(P) terms 2"));
        // sorted row-major upper triangle
        let pos00 = text.find("    0 0 -1").unwrap();
        let pos11 = text.find("    1 1 -1").unwrap();
        assert!(pos00 < pos11);
    }
}
