"""Flask application factory"""
import os

from flask import Flask

from rmt.config import config
from rmt.extensions import limiter


def create_app(config_name=None):
    """Create and configure the Flask application"""
    if config_name is None:
        config_name = os.environ.get('FLASK_ENV', 'development')

    app = Flask(__name__)
    app.config.from_object(config[config_name])

    # Initialize extensions
    limiter.init_app(app)

    # Register blueprints
    from rmt.blueprints.api import bp as api_bp

    app.register_blueprint(api_bp, url_prefix='/api')

    # Expose the batch commands as `flask rmt ...`
    from rmt.cli import cli

    app.cli.add_command(cli, 'rmt')

    return app
