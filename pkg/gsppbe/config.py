#!/usr/bin/env python

"""
    config.py
    ~~~~~~~~~

    Manages numerical settings (rank tolerance, dense size limit,
    stability threshold, GMRES defaults) stored in an ini file.

    :copyright: (c) 2026 by the gsppbe authors.
    :license: see LICENSE for more details.
"""


import configparser
import logging
import os
import types
from collections import namedtuple

logger = logging.getLogger('gsppbe.config')

UNIT_ROUNDOFF = 2.0 ** -52


def getdef(self, section, option, default_value):
    """ConfigParser.get with a fallback for a missing section or option"""
    try:
        return self.get(section, option)
    except (configparser.NoSectionError, configparser.NoOptionError):
        return default_value


Settings = namedtuple(
    'Settings',
    [
        'rank_tol',
        'dense_limit',
        'verify_rtol',
        'chunk_rows',
        'roundoff_factor',
        'gmres_tol',
        'gmres_maxit',
    ],
)

DEFAULT_SETTINGS = Settings(
    rank_tol=1e-12,
    dense_limit=4_000_000,
    verify_rtol=1e-10,
    chunk_rows=20_000,
    roundoff_factor=1e4,
    gmres_tol=1e-8,
    gmres_maxit=0,
)


def default_threshold(settings=DEFAULT_SETTINGS):
    """Stability threshold: unit roundoff scaled by the configured factor"""
    return settings.roundoff_factor * UNIT_ROUNDOFF


class Config:

    """Manages the gsppbe settings file"""

    DEFAULTS = {
        'numerics': {
            'rank_tol': str(DEFAULT_SETTINGS.rank_tol),
            'dense_limit': str(DEFAULT_SETTINGS.dense_limit),
            'verify_rtol': str(DEFAULT_SETTINGS.verify_rtol),
            'chunk_rows': str(DEFAULT_SETTINGS.chunk_rows),
        },
        'stability': {'roundoff_factor': str(DEFAULT_SETTINGS.roundoff_factor)},
        'solvers': {
            'gmres_tol': str(DEFAULT_SETTINGS.gmres_tol),
            'gmres_maxit': str(DEFAULT_SETTINGS.gmres_maxit),
        },
    }

    FLOATS = ('rank_tol', 'verify_rtol', 'roundoff_factor', 'gmres_tol')

    @classmethod
    def get_config_parser(cls):
        parser = configparser.ConfigParser()
        parser.getdef = types.MethodType(getdef, parser)
        return parser

    def __init__(self, config_file=None):
        self.config = self.get_config_parser()
        self.config_file = config_file or self.default_config_file
        self.config.read(self.config_file)

        # first run writes the defaults out
        if not os.path.exists(self.config_file):
            self.create_default_config()

    @property
    def default_config_file(self):
        """~/.config/gsppbe.ini, or ~/.gsppbe on systems without ~/.config"""
        config_dir = os.path.expanduser('~/.config')
        if not os.path.isdir(config_dir):
            return os.path.expanduser('~/.gsppbe')
        return f'{config_dir}/gsppbe.ini'

    def update(self, config):
        """Overrides defaults with the values of a {section: {key: value}}
        dict and saves the result.

        Args:
            config (dict)
        """
        config_parser = self.get_config_parser()

        _config = {section: dict(values) for section, values in self.DEFAULTS.items()}
        for section, values in config.items():
            _config.setdefault(section, {}).update(
                {key: str(value) for key, value in values.items()}
            )

        for section in _config:
            config_parser.add_section(section)
            for key, value in _config[section].items():
                config_parser.set(section, key, value)

        self.config = config_parser
        self._write()

    def create_default_config(self):
        """Creates and saves a new config file with the default values at
        the appropriate filepath.
        """
        for section in self.DEFAULTS:
            if not self.config.has_section(section):
                self.config.add_section(section)
            for key, default in self.DEFAULTS[section].items():
                self.config.set(section, key, default)
        self._write()

    def _write(self):
        try:
            with open(self.config_file, 'w') as fh:
                self.config.write(fh)
        except OSError as e:
            logger.warning('Could not write %s (%s); using in-memory settings', self.config_file, e)

    def _get_config(self):
        config = {}
        for section in self.DEFAULTS:
            for key, default in self.DEFAULTS[section].items():
                config[key] = self.config.getdef(section, key, default)
        return config

    def get_config(self):
        """Loads the settings and returns them as a typed ``Settings``

        Raises:
            ValueError: when a value cannot be converted
        """
        raw = self._get_config()
        values = {}
        for key, value in raw.items():
            try:
                values[key] = float(value) if key in self.FLOATS else int(value)
            except ValueError:
                raise ValueError(f'{self.config_file}: invalid value for {key}: {value!r}')
        return Settings(**values)
