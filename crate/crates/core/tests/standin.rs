//! The bundled stand-in files are reproducible from the generator.

use mixdag::{io, synth};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/standin");

#[test]
fn bundled_standin_matches_generator() {
    let d = synth::standin_dataset(2000, 1948).unwrap();
    let mut csv = Vec::new();
    io::write_csv(&d, &mut csv).unwrap();
    let bundled = std::fs::read(format!("{DIR}/standin.csv")).unwrap();
    assert!(csv == bundled, "regenerated csv differs from the bundled copy");
    let waves = std::fs::read_to_string(format!("{DIR}/waves.json")).unwrap();
    assert_eq!(waves, io::write_waves_json(&d.wave_assignment().unwrap()).unwrap());
    let rel = std::fs::read_to_string(format!("{DIR}/relations.txt")).unwrap();
    assert_eq!(rel, synth::standin_relations());
}

#[test]
fn bundled_standin_reads_back() {
    let waves = io::read_waves_json(&std::fs::read_to_string(format!("{DIR}/waves.json")).unwrap()).unwrap();
    let f = std::fs::File::open(format!("{DIR}/standin.csv")).unwrap();
    let d = io::read_csv(f, &waves).unwrap();
    assert_eq!(d.n_rows(), 2000);
    assert_eq!(d.labels.len(), 24);
    assert_eq!(d.wave_assignment().unwrap().n_waves(), 3);
}
