"""Run configuration validation and the four CLI commands."""

import json

import numpy as np
import numpy.testing as npt
import pytest

from cxrnet.cli import cmd_eval, cmd_preprocess, cmd_split, cmd_train, main
from cxrnet.config import ConfigError, RunConfig
from cxrnet.image_io import read_gray, write_png

from helpers import build_flat_dataset, build_synthetic_dataset, ramp_image, random_image


def tiny_config(root, out, **train_overrides):
    train = {"batch_size": 8, "epochs": 2, "lr": 1e-3, "seed": 3}
    train.update(train_overrides)
    return RunConfig.from_dict(
        {
            "dataset": {"root": str(root)},
            "preproc": {"name": "identity"},
            "model": {"input_size": 32, "num_classes": 4, "width_divisor": 16},
            "train": train,
            "output": {"dir": str(out)},
        }
    )


class TestRunConfig:
    def test_defaults_materialized(self):
        cfg = RunConfig.from_dict({})
        doc = cfg.to_dict()
        assert doc["model"] == {"input_size": 224, "num_classes": 4, "width_divisor": 1}
        assert doc["train"] == {"batch_size": 32, "epochs": 25, "lr": 1e-3, "seed": 0}
        assert doc["preproc"]["name"] == "histeq"
        assert doc["dataset"]["fractions"] == [0.8, 0.1, 0.1]

    def test_unknown_key_rejected_with_dotted_name(self):
        with pytest.raises(ConfigError, match="dataset.rooot"):
            RunConfig.from_dict({"dataset": {"rooot": "x"}})
        with pytest.raises(ConfigError, match="unknown config key: extra"):
            RunConfig.from_dict({"extra": {}})

    @pytest.mark.parametrize(
        "doc,key",
        [
            ({"dataset": {"fractions": [0.5, 0.5]}}, "dataset.fractions"),
            ({"dataset": {"fractions": [0.9, 0.2, 0.1]}}, "dataset.fractions"),
            ({"preproc": {"name": "sharpen"}}, "preproc.name"),
            ({"model": {"input_size": 16}}, "model.input_size"),
            ({"model": {"num_classes": 1}}, "model.num_classes"),
            ({"model": {"width_divisor": 0}}, "model.width_divisor"),
            ({"train": {"batch_size": 0}}, "train.batch_size"),
            ({"train": {"epochs": 0}}, "train.epochs"),
            ({"train": {"lr": -0.1}}, "train.lr"),
            ({"train": {"seed": "abc"}}, "train.seed"),
            ({"output": {"dir": ""}}, "output.dir"),
        ],
    )
    def test_invalid_values_name_the_key(self, doc, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            RunConfig.from_dict(doc)

    def test_zero_lr_is_allowed(self):
        assert RunConfig.from_dict({"train": {"lr": 0}}).lr == 0.0

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="JSON"):
            RunConfig.from_file(path)

    def test_echo_replays_identically(self, tmp_path):
        cfg = tiny_config("/data", tmp_path / "out")
        cfg.write_echo(tmp_path / "echo.json")
        again = RunConfig.from_file(tmp_path / "echo.json")
        assert again == cfg


class TestPreprocessCommand:
    def test_histeq_on_ramp_is_identity(self, tmp_path):
        src = tmp_path / "in" / "ramp.png"
        write_png(src, ramp_image())
        cmd_preprocess(src, "histeq", {}, tmp_path / "out")
        out = read_gray(tmp_path / "out" / "ramp.png")
        npt.assert_array_equal(out, ramp_image())

    def test_threshold_outputs_binary(self, tmp_path):
        rng = np.random.default_rng(0)
        for i in range(3):
            write_png(tmp_path / "in" / f"{i}.png", random_image(rng, 16, 16))
        cmd_preprocess(tmp_path / "in", "threshold", {"block": 5, "c": 2.0}, tmp_path / "out")
        for i in range(3):
            out = read_gray(tmp_path / "out" / f"{i}.png")
            assert set(np.unique(out)) <= {0, 255}

    def test_ltp_writes_two_files_per_input(self, tmp_path):
        write_png(tmp_path / "in" / "img.png", random_image(np.random.default_rng(1)))
        pairs = cmd_preprocess(tmp_path / "in", "ltp", {}, tmp_path / "out")
        assert len(pairs) == 2
        assert (tmp_path / "out" / "img_upper.png").exists()
        assert (tmp_path / "out" / "img_lower.png").exists()

    def test_mirrors_directory_tree(self, tmp_path):
        rng = np.random.default_rng(2)
        write_png(tmp_path / "in" / "a" / "x.png", random_image(rng))
        write_png(tmp_path / "in" / "b" / "y.png", random_image(rng))
        cmd_preprocess(tmp_path / "in", "augment", {"alpha": 1.2, "beta": 10.0}, tmp_path / "out")
        assert (tmp_path / "out" / "a" / "x.png").exists()
        assert (tmp_path / "out" / "b" / "y.png").exists()
        manifest = (tmp_path / "out" / "preprocess_manifest.csv").read_text().splitlines()
        assert manifest[0] == "input,output"
        assert len(manifest) == 3

    def test_unknown_operator_lists_valid(self, tmp_path):
        write_png(tmp_path / "in" / "x.png", ramp_image())
        with pytest.raises(ValueError, match="ltp"):
            cmd_preprocess(tmp_path / "in", "sharpen", {}, tmp_path / "out")


class TestSplitCommand:
    def test_flat_layout_gets_stratified(self, tmp_path, capsys):
        build_flat_dataset(tmp_path / "data", per_class=10)
        cfg = tiny_config(tmp_path / "data", tmp_path / "out")
        path = cmd_split(cfg)
        lines = path.read_text().splitlines()
        assert lines[0] == "path,class,split"
        assert len(lines) == 41
        splits = [line.rsplit(",", 1)[1] for line in lines[1:]]
        assert splits.count("train") == 32
        assert splits.count("val") == 4
        assert splits.count("test") == 4
        assert "train" in capsys.readouterr().out

    def test_presplit_layout_passes_through(self, tmp_path):
        build_synthetic_dataset(tmp_path / "data", n_train=2, n_val=1, side=32)
        cfg = tiny_config(tmp_path / "data", tmp_path / "out")
        path = cmd_split(cfg)
        splits = {line.rsplit(",", 1)[1] for line in path.read_text().splitlines()[1:]}
        assert splits == {"train", "val"}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    return build_synthetic_dataset(root, n_train=4, n_val=2, n_test=2, side=32)


class TestTrainEvalCommands:
    def test_train_writes_artifacts(self, dataset, tmp_path):
        from cxrnet import persistence

        cfg = tiny_config(dataset, tmp_path / "run")
        paths = cmd_train(cfg)
        net = persistence.load(paths["checkpoint"])
        assert net.spec.num_classes == 4
        log_lines = paths["training_log"].read_text().splitlines()
        assert log_lines[0] == "epoch,mean_loss,val_accuracy"
        assert len(log_lines) == 3  # header + 2 epochs
        for line in log_lines[1:]:
            epoch, loss, acc = line.split(",")
            float(loss)
            assert acc != ""  # val split exists
        echo = json.loads(paths["config_echo"].read_text())
        assert echo == cfg.to_dict()

    def test_zero_lr_checkpoints_identical(self, dataset, tmp_path):
        cfg = tiny_config(dataset, tmp_path / "run", lr=0.0, epochs=1)
        paths = cmd_train(cfg)
        assert (
            paths["checkpoint"].read_bytes()
            == paths["initial_checkpoint"].read_bytes()
        )

    def test_same_seed_identical_training_log(self, dataset, tmp_path):
        cfg_a = tiny_config(dataset, tmp_path / "a")
        cfg_b = tiny_config(dataset, tmp_path / "b")
        log_a = cmd_train(cfg_a)["training_log"].read_bytes()
        log_b = cmd_train(cfg_b)["training_log"].read_bytes()
        assert log_a == log_b

    def test_class_count_mismatch_names_key(self, dataset, tmp_path):
        cfg = tiny_config(dataset, tmp_path / "run")
        cfg = RunConfig.from_dict({**cfg.to_dict(), "model": {**cfg.to_dict()["model"], "num_classes": 3}})
        with pytest.raises(ConfigError, match="num_classes"):
            cmd_train(cfg)

    def test_eval_emits_metrics_and_roc(self, dataset, tmp_path, capsys):
        cfg = tiny_config(dataset, tmp_path / "run")
        ckpt = cmd_train(cfg)["checkpoint"]
        out = cmd_eval(ckpt, tiny_config(dataset, tmp_path / "eval"), split="test")
        table = out["metrics"].read_text().splitlines()
        assert table[0] == "class,support,recall,precision,f1,auc"
        assert len(table) == 5
        assert "class,support" in capsys.readouterr().out
        svg = (tmp_path / "eval" / "roc_checker.svg").read_text()
        assert svg.startswith("<svg") or "<svg" in svg
        assert "href" not in svg
        csv_text = (tmp_path / "eval" / "roc_checker.csv").read_text()
        assert csv_text.splitlines()[0] == "class,fpr,tpr"

    def test_eval_class_count_mismatch(self, dataset, tmp_path):
        cfg = tiny_config(dataset, tmp_path / "run")
        ckpt = cmd_train(cfg)["checkpoint"]
        two = tmp_path / "two"
        build_synthetic_dataset(two, n_train=3, n_val=0, side=32)
        import shutil

        for extra in ("hstripe", "vstripe"):
            shutil.rmtree(two / "train" / extra)
        cfg2 = tiny_config(two, tmp_path / "eval2")
        with pytest.raises(ValueError, match="classes"):
            cmd_eval(ckpt, cfg2, split="train")


class TestMainEntry:
    def test_exit_zero_on_success(self, tmp_path):
        write_png(tmp_path / "in" / "x.png", ramp_image())
        code = main(
            ["preprocess", "--input", str(tmp_path / "in"), "--operator", "histeq",
             "--out", str(tmp_path / "out")]
        )
        assert code == 0

    def test_exit_one_on_bad_operator(self, tmp_path, capsys):
        write_png(tmp_path / "in" / "x.png", ramp_image())
        code = main(
            ["preprocess", "--input", str(tmp_path / "in"), "--operator", "bogus",
             "--out", str(tmp_path / "out")]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_exit_one_on_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"epochs": 0}}))
        code = main(["train", "--config", str(cfg)])
        assert code == 1
        assert "train.epochs" in capsys.readouterr().err

    def test_seed_override_lands_in_echo(self, tmp_path):
        build_flat_dataset(tmp_path / "data", per_class=5)
        cfg = tmp_path / "c.json"
        cfg.write_text(
            json.dumps(
                {
                    "dataset": {"root": str(tmp_path / "data")},
                    "output": {"dir": str(tmp_path / "out")},
                }
            )
        )
        code = main(["split", "--config", str(cfg), "--seed", "99"])
        assert code == 0
        echo = json.loads((tmp_path / "out" / "effective_config.json").read_text())
        assert echo["train"]["seed"] == 99
