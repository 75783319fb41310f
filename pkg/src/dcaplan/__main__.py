import sys

from dcaplan.bench import main

sys.exit(main())
