#!/usr/bin/env python3
"""Regenerate data/builtin_attrs.json.

Attributes of each type are dir(T) minus dir(object). Keys are the short
head names produced by type normalization (``list``, ``Path``, ...).
Run with the pinned interpreter and commit the output.
"""
import argparse
import collections
import collections.abc as abc
import contextvars
import datetime
import decimal
import fractions
import io
import json
import logging
import pathlib
import platform
import re
import sys
import threading
import types
import typing
import uuid

TYPES = {
    "object": object,
    "None": type(None),
    "int": int,
    "float": float,
    "complex": complex,
    "bool": bool,
    "str": str,
    "bytes": bytes,
    "bytearray": bytearray,
    "memoryview": memoryview,
    "list": list,
    "tuple": tuple,
    "dict": dict,
    "set": set,
    "frozenset": frozenset,
    "range": range,
    "slice": slice,
    "type": type,
    "property": property,
    "BaseException": BaseException,
    "Exception": Exception,
    "ValueError": ValueError,
    "TypeError": TypeError,
    "KeyError": KeyError,
    "RuntimeError": RuntimeError,
    "OSError": OSError,
    "defaultdict": collections.defaultdict,
    "OrderedDict": collections.OrderedDict,
    "Counter": collections.Counter,
    "deque": collections.deque,
    "ChainMap": collections.ChainMap,
    "Callable": abc.Callable,
    "Iterable": abc.Iterable,
    "Iterator": abc.Iterator,
    "Generator": abc.Generator,
    "Collection": abc.Collection,
    "Container": abc.Container,
    "Sized": abc.Sized,
    "Hashable": abc.Hashable,
    "Sequence": abc.Sequence,
    "MutableSequence": abc.MutableSequence,
    "Mapping": abc.Mapping,
    "MutableMapping": abc.MutableMapping,
    "AbstractSet": abc.Set,
    "MutableSet": abc.MutableSet,
    "KeysView": abc.KeysView,
    "ValuesView": abc.ValuesView,
    "ItemsView": abc.ItemsView,
    "Awaitable": abc.Awaitable,
    "Coroutine": abc.Coroutine,
    "AsyncIterator": abc.AsyncIterator,
    "AsyncIterable": abc.AsyncIterable,
    "AsyncGenerator": abc.AsyncGenerator,
    "Reversible": abc.Reversible,
    "IO": typing.IO,
    "TextIO": typing.TextIO,
    "BinaryIO": typing.BinaryIO,
    "StringIO": io.StringIO,
    "BytesIO": io.BytesIO,
    "Path": pathlib.Path,
    "PurePath": pathlib.PurePath,
    "ContextVar": contextvars.ContextVar,
    "Token": contextvars.Token,
    "datetime": datetime.datetime,
    "date": datetime.date,
    "time": datetime.time,
    "timedelta": datetime.timedelta,
    "timezone": datetime.timezone,
    "Decimal": decimal.Decimal,
    "Fraction": fractions.Fraction,
    "Pattern": re.Pattern,
    "Match": re.Match,
    "UUID": uuid.UUID,
    "Logger": logging.Logger,
    "Lock": type(threading.Lock()),
    "Thread": threading.Thread,
    "Event": threading.Event,
    "ModuleType": types.ModuleType,
    "FunctionType": types.FunctionType,
    "MethodType": types.MethodType,
    "TracebackType": types.TracebackType,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/builtin_attrs.json")
    args = ap.parse_args()
    base = set(dir(object))
    catalog = {
        "interpreter": "%s %s" % (platform.python_implementation(), platform.python_version()),
        "object_attrs": sorted(base),
        "types": {name: sorted(set(dir(t)) - base) for name, t in sorted(TYPES.items())},
    }
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(catalog, f, indent=1, sort_keys=True)
        f.write("\n")
    print("wrote %d types to %s" % (len(TYPES), args.out), file=sys.stderr)


if __name__ == "__main__":
    main()
