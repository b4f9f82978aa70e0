//! Gradient correctness and training-step contracts on micro networks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrp_core::VariantFlags;
use vrp_io::{generate_instance, normalize_for_policy, GenConfig};
use vrp_policy::{PolicyConfig, PolicyParams};
use vrp_trainer::gradcheck::{
    finite_difference_gradient, freeze_batch, per_tensor_relative_errors, replay_gradient,
    replay_loss,
};
use vrp_trainer::{
    adapt_for_tsp, instance_gradient, reinforce_step, shared_baseline, Optimizer, OptimState,
    TrainConfig,
};

fn micro_cfg() -> TrainConfig {
    let mut cfg = TrainConfig::desk(VariantFlags::mdvrp(), 42);
    cfg.model = PolicyConfig::micro();
    cfg.customers = 3;
    cfg.depots = 2; // g = 5
    cfg.batch_size = 2;
    cfg.n_starts = Some(2);
    cfg
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let cfg = micro_cfg();
    let params = PolicyParams::init(cfg.model, cfg.variant, 1234);
    let batch = freeze_batch(&params, &cfg).unwrap();
    // The frozen batch must carry a learning signal.
    assert!(batch
        .advantages
        .iter()
        .any(|advs| advs.iter().any(|a| a.abs() > 1e-12)));
    let analytic = replay_gradient(&params, &batch).unwrap();
    let numeric = finite_difference_gradient(&params, &batch, 1e-5).unwrap();
    for (name, err) in per_tensor_relative_errors(&params, &analytic, &numeric) {
        assert!(
            err <= 1e-4,
            "tensor {name}: relative error {err} exceeds 1e-4"
        );
    }
}

#[test]
fn equal_rewards_give_exactly_zero_gradient() {
    // One customer: every trajectory is depot -> customer -> depot, so all
    // rewards coincide and the advantage is identically zero.
    let inst = generate_instance(&GenConfig::new(VariantFlags::cvrp(), 1, 1, 5)).unwrap();
    let norm = normalize_for_policy(&inst).unwrap();
    let params = PolicyParams::init(PolicyConfig::micro(), VariantFlags::cvrp(), 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grad = instance_gradient(&params, &norm.instance, norm.horizon, 1, &mut rng).unwrap();
    assert!(grad.grads.is_none(), "equal rewards must short-circuit");
    assert_eq!(grad.rewards.len(), 1);
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let mut cfg = micro_cfg();
    cfg.learning_rate = 0.0;
    cfg.optimizer = Optimizer::Sgd;
    let mut params = PolicyParams::init(cfg.model, cfg.variant, 77);
    let before = params.clone();
    let mut opt = OptimState::new(&params, cfg.optimizer);
    reinforce_step(&mut params, &mut opt, &cfg, 0, 0).unwrap();
    for ((_, a), (_, b)) in before
        .trainable_tensors()
        .iter()
        .zip(params.trainable_tensors())
    {
        assert_eq!(*a, &b);
    }
}

#[test]
fn shared_baseline_is_the_row_mean() {
    use ndarray::array;
    let all_equal = array![[2.5, 2.5, 2.5]];
    assert_eq!(shared_baseline(&all_equal), vec![2.5]);

    let single = array![[7.25]];
    assert_eq!(shared_baseline(&single), vec![7.25]);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    use rand::Rng;
    let m = ndarray::Array2::from_shape_fn((4, 5), |_| rng.random_range(-3.0..3.0));
    let b = shared_baseline(&m);
    for i in 0..4 {
        let mut acc = 0.0;
        for j in 0..5 {
            acc += m[[i, j]];
        }
        assert!((b[i] - acc / 5.0).abs() <= 1e-12);
    }
}

#[test]
fn training_is_reproducible_for_a_fixed_seed() {
    let mut cfg = micro_cfg();
    cfg.epochs = 1;
    cfg.steps_per_epoch = 2;
    let a = vrp_trainer::train(&cfg).unwrap();
    let b = vrp_trainer::train(&cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.curve.len(), 1);
}

#[test]
fn zero_epochs_return_initial_or_verbatim_parameters() {
    let mut cfg = micro_cfg();
    cfg.epochs = 0;
    let out = vrp_trainer::train(&cfg).unwrap();
    assert!(out.curve.is_empty());

    // Fine-tuning with zero epochs hands the checkpoint back verbatim.
    let pretrained = out.params.clone();
    let mut ft = cfg.clone();
    ft.variant = VariantFlags::cvrp();
    ft.depots = 1;
    let tuned = vrp_trainer::finetune(pretrained.clone(), &ft).unwrap();
    for ((_, a), (_, b)) in pretrained
        .trainable_tensors()
        .iter()
        .zip(tuned.params.trainable_tensors())
    {
        assert_eq!(*a, &b);
    }
    // Shapes never change across fine-tuning.
    for ((na, a), (nb, b)) in pretrained
        .trainable_tensors()
        .iter()
        .zip(tuned.params.trainable_tensors())
    {
        assert_eq!(na, &nb);
        assert_eq!(a.raw_dim(), b.raw_dim());
    }
}

#[test]
fn curve_length_equals_epochs() {
    let mut cfg = micro_cfg();
    cfg.epochs = 2;
    cfg.steps_per_epoch = 1;
    let out = vrp_trainer::train(&cfg).unwrap();
    assert_eq!(out.curve.len(), 2);
}

#[test]
fn adapted_model_decodes_a_valid_tour() {
    let pretrained = PolicyParams::init(PolicyConfig::micro(), VariantFlags::mdvrp(), 21);
    let adapted = adapt_for_tsp(&pretrained).unwrap();
    let inst = generate_instance(&GenConfig::new(VariantFlags::tsp(), 4, 1, 2)).unwrap();
    let norm = normalize_for_policy(&inst).unwrap();
    let (sol, _) = vrp_policy::greedy_construct(&adapted, &norm.instance, norm.horizon, 200).unwrap();
    let report = vrp_core::check_feasibility(&sol, &norm.instance);
    assert!(report.feasible);
    assert_eq!(sol.routes.len(), 1);
    assert_eq!(sol.routes[0].customers.len(), norm.instance.num_nodes() - 1);
}

#[test]
fn checkpoint_round_trip_preserves_greedy_rollouts() {
    let cfg = micro_cfg();
    let params = PolicyParams::init(cfg.model, cfg.variant, 55);
    let inst = generate_instance(&cfg.gen_config(9)).unwrap();
    let norm = normalize_for_policy(&inst).unwrap();
    let before = vrp_policy::greedy_construct(&params, &norm.instance, norm.horizon, 200).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("micro.ckpt");
    vrp_trainer::save_checkpoint(&params, &path).unwrap();
    let loaded = vrp_trainer::load_checkpoint(&path).unwrap();
    assert_eq!(params, loaded);
    let after = vrp_policy::greedy_construct(&loaded, &norm.instance, norm.horizon, 200).unwrap();
    assert_eq!(before.0, after.0);
    assert_eq!(before.1, after.1);
}
