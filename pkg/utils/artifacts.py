"""CSV and JSON artifact writers"""

import csv
import io
import json
import logging
import math
import os
import shutil
import tempfile

import numpy as np

from dynperc.errors import ConfigError

logger = logging.getLogger(__name__)

HEADER_PREFIX = '# '


def _plain(value):
    """Convert numpy scalars and arrays to JSON-ready Python values"""
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ('inf' if value > 0 else '-inf')
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def to_json_text(data):
    return json.dumps(_plain(data), indent=2, sort_keys=True) + '\n'


def _atomic_write(path, text):
    """Write text to a temp file next to path, then move it into place"""
    directory = os.path.dirname(os.path.abspath(path))
    temp = None
    try:
        os.makedirs(directory, exist_ok=True)
        fd, temp = tempfile.mkstemp(dir=directory, prefix='.dynperc-')
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        shutil.move(temp, path)
    except OSError as e:
        logger.error("Failed to write %s: %s", path, e)
        raise ConfigError('out', "cannot write {}: {}".format(path, e))
    finally:
        if temp and os.path.exists(temp):
            os.remove(temp)
    return path


def csv_text(meta, columns, rows):
    """CSV body with a one-line JSON metadata header"""
    buffer = io.StringIO()
    buffer.write(HEADER_PREFIX + json.dumps(_plain(meta), sort_keys=True, separators=(',', ':')) + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def write_csv(path, meta, columns, rows):
    return _atomic_write(path, csv_text(meta, columns, rows))


def write_json(path, data):
    return _atomic_write(path, to_json_text(data))


def read_csv(path):
    """(meta, columns, rows) of a file written by write_csv"""
    with open(path, 'r') as f:
        first = f.readline()
        meta = json.loads(first[len(HEADER_PREFIX):]) if first.startswith(HEADER_PREFIX) else {}
        reader = csv.reader(f)
        columns = next(reader, [])
        rows = [row for row in reader]
    return meta, columns, rows
