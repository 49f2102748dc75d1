//! End-to-end chain on the atrial phantom: extrude → tag → fibers → activate
//! → voltages → electrode potentials → 12 leads → P-wave duration.

use ep_sim::ap::{vm_movie, ApTemplate};
use ep_sim::conduction::ConductionTable;
use ep_sim::eikonal::{fast_march, sinus_seed};
use ep_sim::fibers::{assign_fibers, FiberRule};
use ep_sim::forward::{surface_potentials, ElectrodeSet};
use ep_sim::leads::{derive_12_leads, detect_p_wave, p_wave_duration};
use ep_sim::regions::{assign_regions, parse_rules};
use ep_sim::wall::{extrude_wall, WallConfig};
use mesh_core::primitives::two_lobe_phantom;
use mesh_core::{Point3, RegionLabel, Vector3};

fn raa_point(endo: &mesh_core::SurfaceMesh) -> Point3<f64> {
    let labels = endo.labels.as_ref().unwrap();
    let members: Vec<_> = endo
        .vertices
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == RegionLabel::Raa)
        .map(|(p, _)| p.coords)
        .collect();
    let centroid = members.iter().sum::<Vector3<f64>>() / members.len() as f64;
    // Nearest surface vertex to the appendage centroid.
    *endo
        .vertices
        .iter()
        .min_by(|a, b| {
            (a.coords - centroid)
                .norm()
                .total_cmp(&(b.coords - centroid).norm())
        })
        .unwrap()
}

#[test]
fn phantom_chain_produces_plausible_p_wave() {
    let endo = two_lobe_phantom(28.0, 3);
    let wall = extrude_wall(&endo, &WallConfig::default()).unwrap();

    let rules = parse_rules("rule RA default\nrule LA halfspace 1 0 0 0\n").unwrap();
    let tagged = assign_regions(&wall, &rules).unwrap();
    let fibered = assign_fibers(&tagged, &FiberRule::RegionPrincipal);
    fibered.validate().unwrap();

    let seed_point = raa_point(&endo);
    let seeds = sinus_seed(&fibered, &seed_point, 2.0).unwrap();
    let map = fast_march(&fibered, &ConductionTable::default(), &seeds).unwrap();
    assert_eq!(map.unreachable_count(), 0);
    let span = map.max_finite();
    assert!(span > 30.0 && span < 200.0, "activation span {span} ms");

    let template = ApTemplate::default_atrial(0.5);
    let duration = span + 40.0;
    let movie = vm_movie(&map, &template, duration, 1.0).unwrap();
    let electrodes = ElectrodeSet::standard_torso();
    let traces = surface_potentials(&fibered, &movie, &electrodes, 3.0, 1.0).unwrap();
    let leads = derive_12_leads(&traces).unwrap();

    // Einthoven closure on the real signals.
    let i = leads.get("I").unwrap();
    let ii = leads.get("II").unwrap();
    let iii = leads.get("III").unwrap();
    let peak = ii.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak > 0.0);
    for k in 0..i.len() {
        assert!((i[k] + iii[k] - ii[k]).abs() < 1e-9 * peak.max(1.0));
    }

    let d = p_wave_duration(&leads, 0.05).unwrap();
    assert!(d > 30.0 && d < 200.0, "P-wave duration {d} ms");

    // Shifting every activation time shifts onset/offset, not duration.
    let shifted_map = ep_sim::eikonal::ActivationMap {
        lat: map.lat.iter().map(|t| t + 15.0).collect(),
        seeds: map.seeds.clone(),
    };
    let movie2 = vm_movie(&shifted_map, &template, duration + 15.0, 1.0).unwrap();
    let traces2 = surface_potentials(&fibered, &movie2, &electrodes, 3.0, 1.0).unwrap();
    let leads2 = derive_12_leads(&traces2).unwrap();
    let ann1 = detect_p_wave(&leads, 0.05).unwrap();
    let ann2 = detect_p_wave(&leads2, 0.05).unwrap();
    assert!((ann2.onset - ann1.onset - 15.0).abs() <= 1.0 + 1e-9);
    assert!((ann2.duration - ann1.duration).abs() <= 1.0 + 1e-9);
}
