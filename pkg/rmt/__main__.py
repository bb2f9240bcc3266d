"""Entry point for ``python -m rmt``"""
from dotenv import load_dotenv

load_dotenv()

from rmt.cli import main  # noqa: E402

main()
