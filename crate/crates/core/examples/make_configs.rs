//! Writes the shipped group configs into `configs/`.

use schottky_lab::SchottkyData;

fn main() -> schottky_lab::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "configs".into());
    for (name, centers, radii) in schottky_lab::examples::SHIPPED {
        let data = SchottkyData::from_disks(centers, radii)?;
        let path = format!("{out}/{name}.json");
        std::fs::write(&path, data.to_config().to_json() + "\n").map_err(|e| schottky_lab::Error::Config(e.to_string()))?;
        println!("{path}");
    }
    Ok(())
}
