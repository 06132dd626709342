import csv
import io
import logging
import os
import re
import tempfile
from datetime import datetime
from multiprocessing.pool import ThreadPool

from .exceptions import ConfigError

log = logging.getLogger(__name__)


def formatTime(t=None):
    """ Properly format a (UTC) timestamp for reports

        :param datetime t: Time to format (defaults to now)
    """
    return (t or datetime.utcnow()).strftime("%Y-%m-%dT%H:%M:%SZ")


def model_id_from_path(path):
    """ Derive a model id from a weight file name:
        ``/tmp/resnet20.safetensors`` becomes ``resnet20``
    """
    name = os.path.basename(path)
    for suffix in [".safetensors", ".st", ".bin"]:
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return os.path.splitext(name)[0] or name


def matches_any(name, patterns):
    """ Does ``name`` match (``re.search``) any of the regular
        expressions in ``patterns``?
    """
    return any(re.search(p, name) for p in patterns)


def check_patterns(patterns, what="pattern"):
    """ Check that every entry of ``patterns`` is a valid regular
        expression

        :raises ConfigError: on the first invalid one
    """
    result = []
    for p in patterns or []:
        try:
            re.compile(p)
        except re.error as e:
            raise ConfigError("Invalid %s %r: %s" % (what, p, e))
        result.append(p)
    return result


def resolve_jobs(jobs):
    """ ``0`` or ``None`` means one worker per available CPU
    """
    if not jobs:
        return os.cpu_count() or 1
    return int(jobs)


def parallel_map(func, items, jobs=1):
    """ Apply ``func`` to every item on a pool of ``jobs`` worker
        threads. Results come back in the order of ``items``, not in
        order of completion.
    """
    items = list(items)
    jobs = min(resolve_jobs(jobs), max(len(items), 1))
    if jobs <= 1:
        return [func(item) for item in items]
    log.debug("Mapping %d items on %d workers" % (len(items), jobs))
    pool = ThreadPool(processes=jobs)
    try:
        return pool.map(func, items)
    finally:
        pool.close()
        pool.join()


def format_value(value):
    """ Render a value for CSV output. Floats use ``repr`` so that
        the text is reproducible and round-trips exactly.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple, set)):
        return ";".join(str(v) for v in value)
    return str(value)


def csv_text(columns, rows):
    """ Render ``rows`` (dicts) as CSV text with the given header
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    return out.getvalue()


def atomic_write(path, text):
    """ Write ``text`` to ``path`` via a temporary file in the same
        directory that is renamed into place once complete
    """
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".swa-")
    try:
        with os.fdopen(fd, "w", newline="") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    log.info("Wrote %s" % path)
    return path
