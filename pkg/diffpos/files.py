import os
import re
from s3fs import S3FileSystem  # type: ignore
from typing import Generator
from .exceptions import ConfigError


S3_HEADER_REGEX = re.compile(r'^s3[a-z]?://')


def is_s3(path: str) -> bool:
    """Check whether the given path is an s3 location.

    Examples:
        >>> is_s3("s3://dummy_bucket/runs/bistable")
        True
        >>> is_s3("/tmp/runs/bistable")
        False
    """
    return bool(path and S3_HEADER_REGEX.match(path.lower()))  # type: ignore


def join(directory: str, file_name: str) -> str:
    """Join an output directory and a file name, local or s3."""
    if is_s3(directory):
        return directory.rstrip("/") + "/" + file_name
    return os.path.join(directory, file_name)


def ensure_output_dir(path: str) -> str:
    """Create a local output directory, or check that an s3 prefix is reachable.

    Raises:
        ConfigError: if the directory cannot be created or written.
    """
    if is_s3(path):
        try:
            S3FileSystem().makedirs(path, exist_ok=True)
        except (OSError, PermissionError, ValueError) as error:
            raise ConfigError(f"Output location {path!r} is not writable: {error}") from error
        return path
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as error:
        raise ConfigError(f"Output directory {path!r} cannot be created: {error}") from error
    if not os.access(path, os.W_OK):
        raise ConfigError(f"Output directory {path!r} is not writable.")
    return path


def write_text(path: str, text: str) -> None:
    """Write UTF-8 text to a local file or an s3 object."""
    try:
        if is_s3(path):
            with S3FileSystem().open(path, "w", encoding="utf-8") as handle:
                handle.write(text)
        else:
            with open(path, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
    except OSError as error:
        raise ConfigError(f"Cannot write {path!r}: {error}") from error


def read_text(path: str) -> str:
    """Read UTF-8 text from a local file or an s3 object."""
    try:
        if is_s3(path):
            with S3FileSystem().open(path, "r", encoding="utf-8") as handle:
                return handle.read()
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as error:
        raise ConfigError(f"Cannot read {path!r}: {error}") from error


def get_local_files(path: str, file_format: str = "json") -> Generator:
    """Get files of one format from a local folder.

    Args:
        path (str): folder path.
        file_format (str): extension of the files to get. By default, json.

    Returns:
        :obj:`typing.Generator`: paths of the matching files, sorted by name.
    """
    desired_extension = ".{}".format(file_format)
    for file_name in sorted(os.listdir(path)):
        file_path = os.path.join(path, file_name)
        if not os.path.isfile(file_path):
            continue
        elif not file_name.endswith(desired_extension):
            continue
        yield file_path


def get_s3_files(path: str, file_format: str = "json") -> Generator:
    """Get files of one format from an s3 prefix; empty objects are skipped.

    Returns:
        :obj:`typing.Generator`: s3 paths of the matching objects.
    """
    s3_fs = S3FileSystem()
    s3_header = S3_HEADER_REGEX.match(path).group(0)  # type: ignore
    desired_extension = ".{}".format(file_format)
    for object_summary in s3_fs.listdir(path):
        if not object_summary["name"].endswith(desired_extension):
            continue
        elif object_summary["type"] == 'directory':
            continue
        elif not object_summary["size"]:
            continue
        yield s3_header + object_summary["name"]


def list_report_files(path: str, file_format: str = "json") -> Generator:
    """Report files of an output location, local or s3."""
    if is_s3(path):
        return get_s3_files(path, file_format)
    return get_local_files(path, file_format)
