use odds_core::pipeline::CampaignConfig;

#[test]
fn sample_config_matches_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../campaign.example.toml");
    let cfg = CampaignConfig::from_path(std::path::Path::new(path)).unwrap();
    assert_eq!(cfg, CampaignConfig::default());
}
