use binsparx::bnn::BinaryTensor;
use binsparx::config::RunConfig;
use binsparx::dataset::{teacher_dataset, toy_model, ToySpec};
use binsparx::devices::{WireModel, WirePreset};
use binsparx::model::{load_model, save_model};
use binsparx::par::Parallelism;
use binsparx::pipeline::{reference_predict, signed_vmm, AdcBits, Engine, EngineConfig};
use binsparx::rng;
use proptest::prelude::*;

fn small_spec() -> ToySpec {
    ToySpec {
        inputs: 128,
        hidden: 64,
        classes: 10,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn golden_exactness(rows in 1usize..150, cols in 1usize..40, tile_log in 1u32..7, bx: bool, seed: u64) {
        let t = 1usize << tile_log;
        let mut r = rng::root(seed);
        let w = BinaryTensor::random(vec![rows, cols], &mut r);
        let x = BinaryTensor::random(vec![rows], &mut r);
        let e = Engine::new(EngineConfig::ideal(t, t, bx)).unwrap();
        let pm = e.program(&w).unwrap();
        prop_assert_eq!(e.vmm(&pm, x.values()).unwrap().0, signed_vmm(&w, x.values()).unwrap());
    }
}

#[test]
fn extreme_parasitics_collapse_accuracy() {
    let model = toy_model(small_spec(), 11);
    let data = teacher_dataset(&model, 100, 11).unwrap();
    let mut cfg = EngineConfig::new(64, 64);
    cfg.wire = WireModel::preset(WirePreset::Custom);
    cfg.wire.r_bl_per_cell = 1e6;
    cfg.wire.r_sl_per_cell = 1e6;
    cfg.best_effort = true;
    let e = Engine::new(cfg).unwrap();
    let rep = e
        .infer(&e.compile(&model).unwrap(), &data, Parallelism::Parallel)
        .unwrap();
    assert!(rep.accuracy < 0.35, "accuracy {}", rep.accuracy);
}

#[test]
fn mild_preset_binsparx_not_worse() {
    let model = toy_model(small_spec(), 12);
    let data = teacher_dataset(&model, 100, 12).unwrap();
    let acc = |bx: bool| {
        let mut cfg = EngineConfig::new(64, 64);
        cfg.wire = WireModel::preset(WirePreset::M6);
        cfg.binsparx = bx;
        let e = Engine::new(cfg).unwrap();
        e.infer(&e.compile(&model).unwrap(), &data, Parallelism::Parallel)
            .unwrap()
            .accuracy
    };
    assert!(acc(true) >= acc(false));
}

#[test]
fn nonideal_inference_is_deterministic() {
    let model = toy_model(small_spec(), 13);
    let data = teacher_dataset(&model, 40, 13).unwrap();
    let mut cfg = EngineConfig::new(32, 32);
    cfg.wire = WireModel::preset(WirePreset::M3);
    cfg.device = binsparx::devices::DeviceModel::sram8t(2e-6);
    let e = Engine::new(cfg).unwrap();
    let cm = e.compile(&model).unwrap();
    let a = e.infer(&cm, &data, Parallelism::Parallel).unwrap();
    let b = e.infer(&cm, &data, Parallelism::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn saved_model_round_trips_through_engine() {
    let dir = tempfile::tempdir().unwrap();
    let model = toy_model(small_spec(), 14);
    save_model(&model, dir.path()).unwrap();
    let loaded = load_model(&dir.path().join("manifest.json")).unwrap();
    let data = teacher_dataset(&model, 20, 14).unwrap();
    let e = Engine::new(EngineConfig::ideal(64, 64, true)).unwrap();
    let rep = e
        .infer(&e.compile(&loaded).unwrap(), &data, Parallelism::Parallel)
        .unwrap();
    for (x, p) in data.features.iter().zip(&rep.predictions) {
        assert_eq!(*p, reference_predict(&model, x).unwrap());
    }
}

#[test]
fn config_file_drives_engine() {
    let cfg = RunConfig::from_toml_str(
        "[array]\nn = 32\nm = 16\n[wire]\npreset = \"M6\"\n[adc]\nbits = \"full\"\n[run]\nseed = 9\n",
    )
    .unwrap();
    let ec = cfg.engine_config().unwrap();
    assert_eq!((ec.n, ec.m, ec.seed), (32, 16, 9));
    assert_eq!(ec.adc.bits, AdcBits::Full);
    let e = Engine::new(ec).unwrap();
    assert_eq!(e.adc().bits, 6);
    let echoed = RunConfig::from_toml_str(&cfg.resolved().to_toml_string()).unwrap();
    assert_eq!(echoed.resolved(), cfg.resolved());
}
