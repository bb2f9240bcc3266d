"""Application configuration"""
import os


def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


def _env_bool(name, default):
    value = os.environ.get(name)
    if value in (None, ''):
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


class Config:
    """Base configuration class"""

    # Adaptive vertex recognition defaults
    GAMMA_FLATNESS = _env_float('RMT_GAMMA_FLATNESS', 0.1)
    GAMMA_WINDOW = _env_float('RMT_GAMMA_WINDOW', 0.1)
    GAMMA_PLATFORM = _env_float('RMT_GAMMA_PLATFORM', 0.01)
    SUBFRAME_REFINEMENT = _env_bool('RMT_SUBFRAME_REFINEMENT', True)

    # Signal preparation
    NORMALIZE = _env_bool('RMT_NORMALIZE', True)
    KEYPOINTS = tuple(os.environ.get('RMT_KEYPOINTS', 'thumb-tip,index-fingertip').split(','))

    # Reports
    REPORT_FORMAT = os.environ.get('RMT_REPORT_FORMAT', 'json')
    SIGNIFICANT_DIGITS = 6
    IIV_MISMATCH_TOLERANCE = 0.1  # relative to M-ITI

    # Method comparison
    WELCH_ALPHA = 0.05
    BLAND_ALTMAN_MULTIPLIER = 1.96
    AGREEMENT_THRESHOLDS = {'M-TF': 0.5, 'MS': 0.5, 'speed': 0.5}  # Hz
    MAXIMAL_SPLIT_HZ = 4.0
    ANALYZED_METHOD_NAME = 'RMT'

    # Keypoint evaluation
    PCK_THRESHOLDS = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)

    # API limits
    MAX_CONTENT_LENGTH = 16 * 1024 * 1024  # 16MB max request body
    RATELIMIT_STORAGE_URI = 'memory://'
    RATELIMIT_HEADERS_ENABLED = True
    RATELIMIT_DEFAULT = '200 per hour'


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    RATELIMIT_ENABLED = False


class ProductionConfig(Config):
    """Production configuration"""
    DEBUG = False
    RATELIMIT_DEFAULT = '60 per hour'


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': DevelopmentConfig
}
