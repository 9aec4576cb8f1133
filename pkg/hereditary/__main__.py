from hereditary.main import main

main()
