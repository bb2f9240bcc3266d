"""Flask extensions initialization"""
from flask_limiter import Limiter
from flask_limiter.util import get_remote_address

# Initialize extensions
limiter = Limiter(key_func=get_remote_address)
