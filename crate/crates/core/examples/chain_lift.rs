//! One stage by hand: lift two vectors, match labels, combine.

use sis_wagner::chain::{build_stages, combine, dglift};
use sis_wagner::dgauss::{sample_zn, GaussParam};
use sis_wagner::rng::seeded;
use sis_wagner::zqlin::random_systematic_instance;

fn main() -> sis_wagner::Result<()> {
    let mut rng = seeded(9);
    let inst = random_systematic_instance(2, 4, 5, &mut rng)?;
    let stage = &build_stages(&inst, &[2], &[2], false)?[0];
    let s = 6.0;
    let g = GaussParam::new(s, &[])?;
    let mut seen = std::collections::HashMap::new();
    loop {
        let x = sample_zn(&g, stage.free_dim(), &mut rng)?;
        let v = dglift(stage, &x, s, &mut rng)?;
        if let Some(u) = seen.remove(&v.label) {
            let out = combine(stage, &u, &v);
            println!("label {:?}: {:?} in next lattice: {}", v.label, out, stage.contains(&out));
            break;
        }
        println!("x = {x:?}, label {:?}", v.label);
        seen.insert(v.label.clone(), v);
    }
    Ok(())
}
