import pytest

from src.command import build_configuration
from src.config.model.command import (DataSourceConfiguration, TrainCommandConfiguration, DemoCommandConfiguration,
                                      PredictCommandConfiguration)
from src.config.model.kernel import KernelConfiguration
from src.util.constant import DataFormat, TaskKind
from src.util.error import ConfigurationError


class TestDataSource:

    def test_defaults(self):
        source = build_configuration(DataSourceConfiguration, path="data.csv")
        assert source.format == DataFormat.CSV
        assert source.resolved_label_column == -1

    def test_features_only(self):
        source = build_configuration(DataSourceConfiguration, path="data.csv", features_only=True)
        assert source.resolved_label_column is None

    @pytest.mark.parametrize("values, message", [
        ({"format": "libsvm", "label_column": 0}, "CSV data only"),
        ({"format": "libsvm", "has_header": True}, "CSV data only"),
        ({"dim": 3}, "libsvm data only"),
        ({"features_only": True, "label_column": 1}, "conflicts"),
        ({"format": "parquet"}, "format"),
    ])
    def test_conflicting_flags(self, values, message):
        with pytest.raises(ConfigurationError, match=message):
            build_configuration(DataSourceConfiguration, path="data.csv", **values)

    def test_blank_path(self):
        with pytest.raises(ConfigurationError, match="blank"):
            build_configuration(DataSourceConfiguration, path="  ")


class TestTrainCommand:

    def test_nested_defaults(self):
        config = build_configuration(TrainCommandConfiguration, data={"path": "d.csv"},
                                     train={"task": "regression"}, checkpoint="m.ckpt")
        assert config.train.task == TaskKind.REGRESSION
        assert config.train.kernel == KernelConfiguration()
        assert config.test_fraction == 0.1

    def test_per_class_regression(self):
        with pytest.raises(ConfigurationError, match="Per-class"):
            build_configuration(TrainCommandConfiguration, data={"path": "d.csv"},
                                train={"task": "regression", "kernel": {"per_class": True}}, checkpoint="m.ckpt")

    @pytest.mark.parametrize("train", [
        {"task": "regression", "m0": 3},
        {"task": "regression", "tt_rank": 0},
        {"task": "classification", "embedding_dim": 11},
        {"task": "regression", "learning_rate": 0.0},
        {"task": "ranking"},
    ])
    def test_out_of_range(self, train):
        with pytest.raises(ConfigurationError, match="Invalid settings"):
            build_configuration(TrainCommandConfiguration, data={"path": "d.csv"}, train=train, checkpoint="m.ckpt")

    def test_training_needs_labels(self):
        with pytest.raises(ConfigurationError, match="label column"):
            build_configuration(TrainCommandConfiguration, data={"path": "d.csv", "features_only": True},
                                train={"task": "regression"}, checkpoint="m.ckpt")


def test_predict_output_defaults_to_stdout():
    config = build_configuration(PredictCommandConfiguration, checkpoint="m.ckpt", data={"path": "d.csv"})
    assert config.output is None
    assert not config.use_variance


def test_demo_shape():
    assert build_configuration(DemoCommandConfiguration).shape == [5, 5, 5, 5]
    with pytest.raises(ConfigurationError, match="positive"):
        build_configuration(DemoCommandConfiguration, shape=[3, 0])


def test_unknown_setting():
    with pytest.raises(ConfigurationError, match="learning_rat"):
        build_configuration(TrainCommandConfiguration, data={"path": "d.csv"},
                            train={"task": "regression", "learning_rat": 0.1}, checkpoint="m.ckpt")
