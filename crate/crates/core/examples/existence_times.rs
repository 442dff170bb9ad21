//! Maximal existence time, limiting class and null locus for a few classes.
//!
//! cargo run --example existence_times

use krflab::cohomology::{self, ClassVector, ExistenceTime};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("cp1", "3"),
        ("p1xp1", "3,1"),
        ("blowup-p2", "4,-1"),
        ("blowup-p2", "5,-2"),
        ("product-ec", "1,1"),
        ("torus-2", "1,2"),
    ];
    for (name, class) in cases {
        let model = cohomology::builtin_by_name(name)?;
        let a0: ClassVector = class.parse()?;
        let t = cohomology::max_existence_time(&model, &a0)?;
        print!("{name:<11} {a0:<12} T = {t}");
        if let ExistenceTime::Exact(_) | ExistenceTime::Approximate { .. } = t {
            let limit = cohomology::limiting_class(&model, &a0)?;
            let null = cohomology::null_locus(&model, &limit)?;
            let kind = if cohomology::is_noncollapsed(&model, &a0)? { "noncollapsed" } else { "collapsed" };
            print!(", limit {limit} ({kind}), null locus {:?}{}", null.subvarieties, if null.whole_space { " + X" } else { "" });
        } else {
            print!(", regime {}", cohomology::long_time_regime(&model)?);
        }
        println!();
    }

    // A class that becomes singular at T = 1/4 with limiting class (1, 0).
    let bl = cohomology::blowup_p2();
    let seed = cohomology::singularity_seed(&bl, &"1,0".parse()?, &cohomology::q(1, 4))?;
    println!("seed for limit (1, 0) at T = 1/4: {seed}");
    Ok(())
}
