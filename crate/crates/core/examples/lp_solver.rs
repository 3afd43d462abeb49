//! Exact simplex on a small production problem, with its dual certificate.
//!
//! ```bash
//! cargo run --example lp_solver
//! ```

use fairshare::lp::{self, LinearProgram, Sense};
use fairshare::rational::{format, int};

fn main() {
    // max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x <= 3
    let mut lp = LinearProgram::new(2);
    lp.set_objective(vec![int(3), int(2)]);
    lp.add_constraint(vec![int(1), int(1)], Sense::Le, int(4));
    lp.add_constraint(vec![int(1), int(3)], Sense::Le, int(6));
    lp.add_constraint(vec![int(1), int(0)], Sense::Le, int(3));

    let sol = lp::solve(&lp);
    println!("status    {:?}", sol.status);
    println!("objective {}", format(&sol.objective));
    for (j, x) in sol.primal.iter().enumerate() {
        println!("x[{j}] = {}", format(x));
    }
    for (r, (c, y)) in lp.constraints().iter().zip(&sol.duals).enumerate() {
        println!("row {r}: {:<24} dual {}", lp::describe_row(c), format(y));
    }
    match lp::certify(&lp, &sol) {
        Ok(()) => println!("certificate checks out exactly"),
        Err(e) => println!("certificate failed: {e}"),
    }
}
