//! Threshold of an amalgam whose ladder pieces are infinite, in closed form.

fn main() -> perctree::Result<()> {
    let report = perctree::closedform::z2z_amalgam_pc()?;
    println!("p_c = {:.10}", report.p_c);
    println!("A = {:.6}, B = {:.6}, C = {:.6}", report.a, report.b, report.c);
    println!("residuals: {:?}", report.residuals);
    Ok(())
}
