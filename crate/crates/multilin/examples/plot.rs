//! Writes a small sweep table and renders its ratio column as an SVG line chart.

use multilin::plot::{render_svg, Scale};

fn main() -> multilin::Result<()> {
    let csv = "run_id,construction,N_or_L,ratio\n\
               a,ce1,16,0.10\na,ce1,32,0.11\na,ce1,64,0.12\n\
               b,ce2,16,0.36\nb,ce2,32,0.37\nb,ce2,64,0.38\n";
    let svg = render_svg(csv, "N_or_L", "ratio", Scale { log_x: true, log_y: false })?;
    let path = std::env::temp_dir().join("multilin_ratio.svg");
    std::fs::write(&path, &svg)?;
    println!("wrote {} ({} bytes, {} series)", path.display(), svg.len(), svg.matches("<polyline").count());
    Ok(())
}
