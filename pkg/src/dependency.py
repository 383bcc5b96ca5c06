from .config.model.command import DataSourceConfiguration
from .data.function.data_io import IDatasetLoader, CsvDatasetLoader, LibsvmDatasetLoader
from .util.constant import DataFormat


def provide_dataset_loader(source: DataSourceConfiguration) -> IDatasetLoader:
    if source.format == DataFormat.LIBSVM:
        return LibsvmDatasetLoader(source.dim)
    return CsvDatasetLoader(source.resolved_label_column, source.has_header)
